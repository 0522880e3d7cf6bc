import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { TabotClient } from "../src/api.js";
import { ChatViewModel } from "../src/chat.js";
import type { ChatAnswer } from "../src/types.js";

const fixtures = JSON.parse(
  readFileSync(new URL("./fixtures/answers.json", import.meta.url), "utf-8"),
) as Record<string, ChatAnswer>;

function clientReturning(answer: ChatAnswer | Error): TabotClient {
  const fetchFn = async (): Promise<Response> => {
    if (answer instanceof Error) throw answer;
    return new Response(JSON.stringify(answer), {
      status: 200,
      headers: { "content-type": "application/json" },
    });
  };
  return new TabotClient("", fetchFn);
}

describe("ChatViewModel", () => {
  it("appends user and bot entries on success", async () => {
    const vm = new ChatViewModel(clientReturning(fixtures.direct_scalar), "d1", "s1");
    const answer = await vm.send("How many women are there?");
    expect(answer?.kind).toBe("direct");
    expect(vm.transcript).toHaveLength(2);
    expect(vm.transcript[0]).toEqual({
      speaker: "user",
      text: "How many women are there?",
    });
  });

  it("keeps the transcript and flags the message on network failure", async () => {
    const vm = new ChatViewModel(clientReturning(new Error("boom")), "d1", "s1");
    const answer = await vm.send("hello");
    expect(answer).toBeNull();
    expect(vm.transcript).toHaveLength(1);
    expect(vm.transcript[0]).toMatchObject({ speaker: "user", failed: true });
  });

  it("retries the last failed message", async () => {
    let calls = 0;
    const fetchFn = async (): Promise<Response> => {
      calls += 1;
      if (calls === 1) throw new Error("offline");
      return new Response(JSON.stringify(fixtures.direct_scalar), { status: 200 });
    };
    const vm = new ChatViewModel(new TabotClient("", fetchFn), "d1", "s1");
    await vm.send("hello");
    const answer = await vm.retryLastFailed();
    expect(answer?.kind).toBe("direct");
    expect(vm.transcript).toHaveLength(2);
    const first = vm.transcript[0];
    expect(first.speaker).toBe("user");
    expect(first.speaker === "user" && first.failed).toBeFalsy();
  });

  it("ignores empty input", async () => {
    const vm = new ChatViewModel(clientReturning(fixtures.direct_scalar), "d1", "s1");
    expect(await vm.send("   ")).toBeNull();
    expect(vm.transcript).toHaveLength(0);
  });

  it("rating failures stay silent (optimistic UI)", async () => {
    const vm = new ChatViewModel(clientReturning(new Error("down")), "d1", "s1");
    expect(await vm.rate(0, "up")).toBe(false);
  });
});
