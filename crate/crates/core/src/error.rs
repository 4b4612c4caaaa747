use thiserror::Error;

/// Construction and validation failures for automata and protocols.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("`{0}` is not a valid symbol (expected an identifier other than `eps`)")]
    InvalidSymbol(String),
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("an automaton needs at least one state value")]
    NoStates,
    #[error("`{name}` is used both as {first} and as {second}")]
    AlphabetOverlap {
        name: String,
        first: &'static str,
        second: &'static str,
    },
    #[error("unknown state value `{0}`")]
    UnknownState(String),
    #[error("`{0}` is not in the input alphabet")]
    UnknownInput(String),
    #[error("`{0}` is not in the output alphabet")]
    UnknownOutput(String),
    #[error("renaming maps both `{first}` and `{second}` to `{target}`")]
    NonInjective {
        first: String,
        second: String,
        target: String,
    },
    #[error("renaming `{source_name}` to `{target}` collides with an existing name")]
    NamingConflict { source_name: String, target: String },
    #[error("a protocol needs at least one role")]
    NoRoles,
    #[error("unknown role `{0}`")]
    UnknownRole(String),
    #[error("channel {0} -> {0} connects a role to itself")]
    SelfChannel(String),
    #[error("duplicate channel {sender} -> {receiver}")]
    DuplicateChannel { sender: String, receiver: String },
    #[error("channel {sender} -> {receiver} carries no character (no output of {sender} is an input of {receiver})")]
    UnroutableChannel { sender: String, receiver: String },
    #[error("output `{character}` of role {sender} is routed ambiguously to {first} and {second}")]
    AmbiguousRoute {
        sender: String,
        character: String,
        first: String,
        second: String,
    },
    #[error("roles mix finite and Muller acceptance ({finite} vs {muller})")]
    MixedAcceptance { finite: String, muller: String },
    #[error("roles {first} and {second} both start with a non-empty output")]
    MultipleInitialOutputs { first: String, second: String },
    #[error("bad configuration: {0}")]
    BadConfiguration(String),
}

/// A configurable resource guard was exceeded.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("the protocol is not closed: some output is unrouted or some input is never fed")]
    NotClosed,
    #[error("state space exceeds the configured cap of {limit} configurations")]
    StateLimit { limit: usize },
    #[error("a strongly connected component has {size} configurations; feasible-set enumeration is capped at {limit}")]
    SccTooLarge { size: usize, limit: usize },
    #[error("more than {limit} {what}; raise the limit or reduce the depth")]
    Explosion { what: &'static str, limit: usize },
}
