"""storysearch: a branching story engine.

Grows an event tree through prompt-driven forward/backward expansion,
discovers high-value branches with Monte Carlo tree search over LLM scores,
grounds generation in a typed entity graph, and evaluates finished narratives
with an LLM judge plus distinct-n diversity metrics.
"""

from .errors import (
    EmptyResponseError,
    IntegrityError,
    InvalidInputError,
    InvalidTypeError,
    IoError,
    NotFoundError,
    ParseError,
    SchemaError,
    SelfLoopError,
    StoryEngineError,
    StrategyError,
    UpstreamError,
    ValidationError,
)
from .evaluation import (
    DiversityReport,
    JudgeReport,
    aggregate_reports,
    distinct_n,
    judge_narrative,
)
from .expansion import (
    ExpansionParams,
    PromptBundle,
    build_backward_prompt,
    build_forward_prompt,
    expand_backward,
    expand_forward,
)
from .experiments import (
    ProviderPair,
    StrategyConfig,
    SuiteReport,
    load_stubs,
    run_diversity_comparison,
    run_strategy,
    run_suite,
    table1_strategies,
)
from .graph import (
    Entity,
    EntityGraph,
    Relationship,
    add_entity,
    add_relationship,
    generate_graph,
    summarize_for_prompt,
)
from .llm import (
    CompletionRequest,
    HttpProvider,
    MockProvider,
    Provider,
    ProviderConfig,
    ScriptedProvider,
    complete_integer,
    complete_structured,
)
from .mcts import (
    SearchConfig,
    SearchReport,
    SearchStats,
    backpropagate,
    run_mcts,
    select,
    simulate,
    ucb1,
)
from .project_io import deserialize_project, serialize_project
from .tree import (
    Direction,
    EventNode,
    EventTree,
    StoryChain,
    add_event,
    ancestor_chain,
    chains_of_length,
    story_order_texts,
)

__version__ = "0.1.0"
