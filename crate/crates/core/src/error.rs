use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("degenerate triangle {triangle} (area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },
    #[error("duplicate vertices {a} and {b}")]
    DuplicateVertex { a: usize, b: usize },
    #[error("inconsistent orientation between triangles {t1} and {t2} across edge ({v1}, {v2})")]
    InconsistentOrientation { t1: usize, t2: usize, v1: usize, v2: usize },
    #[error("non-manifold edge ({v1}, {v2}) shared by {count} triangles")]
    NonManifoldEdge { v1: usize, v2: usize, count: usize },
    #[error("dense size cap exceeded: N = {n} > {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("degenerate extent: all basis centroids coincide")]
    DegenerateExtent,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("octree/pattern mismatch: {0}")]
    PatternMismatch(String),
    #[error("special function overflow: {0}")]
    Overflow(String),
    #[error("kernel/list mismatch: {0}")]
    KernelListMismatch(String),
    #[error("interpolation stencil of {stencil} points exceeds grid of {grid} points")]
    StencilTooLarge { stencil: usize, grid: usize },
    #[error("inner solve did not converge: residual {residual:e} after {iterations} iterations")]
    InnerNotConverged { iterations: usize, residual: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
