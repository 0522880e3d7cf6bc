"""tabot: generate and run conversational interfaces over CSV data.

Pipeline: load a CSV, profile it into a DataSchema, optionally enrich the
schema (synonyms, row aliases, composite fields, field groups, value
synonyms), instantiate the conversation-pattern catalog into a BotBundle,
then chat: match utterances to intents, extract typed parameters, answer
via the deterministic in-memory query engine, and degrade to a flagged
text-to-SQL fallback for everything else.
"""

from .config import DEFAULT_CONFIG, TabotConfig
from .dialogue import (Answer, DialogueManager, InteractionLog,
                       InteractionRecord, ResultPage, Session, SessionStore,
                       UnknownTurn, route_fallback)
from .fallback import (FallbackClient, FallbackReply, FallbackUnavailable,
                       HttpFallbackClient, SqlRejected, StaticFallbackClient,
                       UnavailableFallbackClient, parse_sql_subset)
from .generator import (BotBundle, BundleError, EntityDef, Intent,
                        bundle_to_doc, bundle_to_json, generate,
                        generate_expanded, generate_generic, load_bundle,
                        predict_expanded_intent_count, select_strategy)
from .ingest import (Column, DuplicateColumnName, EmptyInput, FieldStats,
                     FieldType, IngestOptions, MalformedCsv, SourceMeta,
                     Table, UnknownField, compute_field_stats,
                     infer_field_type, load_csv)
from .matching import (EmptyUtterance, EntityMention, IntentMatcher,
                       MatchResult, Utterance, tokenize)
from .patterns import (Catalog, ConversationPattern, Operator,
                       applicable_patterns, catalog, load_catalog,
                       operator_variants)
from .query import (Condition, GroupBy, MetaAction, OrderBy, PlanError,
                    PlanValidationError, QueryPlan, RenderedSql, ResultSet,
                    UnboundSlot, build_plan, execute, render_sql,
                    validate_plan)
from .schema import (AddComposite, AddGroup, AddRowAlias, AddSynonym,
                     AddValueSynonym, CompositeField, CompositeShadowsField,
                     DataSchema, FieldDescriptor, FieldGroup,
                     GroupMembershipConflict, IntegrityViolation,
                     RemoveComposite, RemoveGroup, RemoveRowAlias,
                     RemoveSynonym, RemoveValueSynonym, SchemaError,
                     SchemaVersionMismatch, SetDisplayName, SynonymCollision,
                     apply_enrichment, apply_enrichments, build_default_schema,
                     command_from_dict, command_to_dict, load_schema,
                     save_schema, schema_to_json)

__version__ = "0.1.0"
