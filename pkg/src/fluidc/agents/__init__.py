"""Multi-agent design pipeline over a pluggable chat-completion transport."""

from .pipeline import (  # noqa: F401
    ChatExchange,
    ClusterResult,
    ConsultantTurn,
    JsonExtractionFailed,
    MalformedToolCall,
    PhaseOrderViolation,
    PipelineConfig,
    PipelineError,
    ToolDispatchError,
    consultant_turn,
    run_computation_cluster,
    run_design_pipeline,
    run_io_designer,
)
from .project import (  # noqa: F401
    ATTRIBUTES,
    DOCUMENT_NAMES,
    FEEDBACK_TYPES,
    DesignProject,
    DocumentError,
    InputSpec,
    OutputSpec,
    ProjectStore,
)
from .roles import ROLES, AgentRole, render_instruction  # noqa: F401
from .transport import (  # noqa: F401
    ChatTransport,
    CountingTransport,
    HttpTransport,
    MockTransport,
    NoJsonFound,
    RecordingTransport,
    SchemaMismatch,
    ScriptedTransport,
    TransportError,
    extract_json,
    request_fingerprint,
    text_response,
    tool_call_response,
)
