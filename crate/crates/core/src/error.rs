use std::fmt;

/// Grid node indices attached to an error. Display truncates long lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodeList(pub Vec<usize>);

impl fmt::Display for NodeList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const SHOWN: usize = 12;
        write!(f, "[")?;
        for (k, i) in self.0.iter().take(SHOWN).enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}")?;
        }
        if self.0.len() > SHOWN {
            write!(f, ", ... ({} nodes total)", self.0.len())?;
        }
        write!(f, "]")
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("non-finite samples at nodes {0}")]
    NonFinite(NodeList),
    #[error("syntax error at offset {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },
    #[error("singular samples at nodes {0}")]
    SingularSample(NodeList),
    #[error("division by zero at node {node} (r = {r:e})")]
    DivisionByZero { node: usize, r: f64 },
    #[error("f/g = {ratio:e} at r_min is not positive")]
    NegativeRatio { ratio: f64 },
    #[error("branch singularity at nodes {0}")]
    BranchSingularity(NodeList),
    #[error("tail not flat: deviation {deviation:e} exceeds {limit:e}")]
    TailNotFlat { deviation: f64, limit: f64 },
    #[error("blow-up: |xi| exceeded 700 at r = {r:e}")]
    BlowUp { r: f64 },
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("degenerate doublet shape: {reason} at nodes {nodes}")]
    DegenerateShape { reason: String, nodes: NodeList },
    #[error("singular 2x2 system at nodes {0}")]
    SingularSystem(NodeList),
    #[error("non-regular threshold: kappa^2 + beta^2 - alpha^2 = {0:e} <= 0")]
    NonRegular(f64),
    #[error("potentials do not decay at r_max: {0}")]
    NonDecayingTail(String),
    #[error("matching determinant has no sign change on [{lo:e}, {hi:e}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("bisection did not converge in {0} iterations")]
    MaxIter(usize),
    #[error("functions are sampled on different grids")]
    GridMismatch,
}

impl Error {
    /// Whether the failure is numerical (as opposed to invalid input).
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidDomain(_)
                | Error::Syntax { .. }
                | Error::SingularSample(_)
                | Error::DegenerateShape { .. }
                | Error::GridMismatch
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_list_truncates() {
        let s = NodeList((0..30).collect()).to_string();
        assert!(s.contains("30 nodes total"));
        assert_eq!(NodeList(vec![1, 2]).to_string(), "[1, 2]");
    }
}
