use alloc::string::String;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A request exceeds a configured size limit.
    #[error("capacity exceeded: {what} needs {requested} but the limit is {allowed}")]
    Capacity {
        what: &'static str,
        requested: usize,
        allowed: usize,
    },
    /// A qubit index lies outside the statevector or overlaps another operand.
    #[error("invalid qubit index {index} for a {n_qubits}-qubit state")]
    QubitIndex { index: usize, n_qubits: usize },
    /// A variable value does not fit the binary encoding.
    #[error("value {value} of variable {variable} does not fit in {bits} bits")]
    Encoding {
        variable: usize,
        value: u64,
        bits: usize,
    },
    /// An argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}
