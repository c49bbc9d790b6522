use thiserror::Error;

/// Error conditions surfaced by the geometry, transport and quadrature layers.
#[derive(Debug, Error)]
pub enum NcehError {
    #[error("degenerate metric at r = {r} (a = {a}): {what}")]
    DegenerateMetric { r: f64, a: f64, what: &'static str },

    #[error("pole singularity at theta = {theta} on chart {chart}")]
    PoleSingularity { theta: f64, chart: &'static str },

    #[error("ODE step control failed to reach unitarity defect {target} (best {best})")]
    OdeStepFailure { target: f64, best: f64 },

    #[error("mode cutoff {cutoff} exceeds grid Nyquist limit {nyquist}")]
    AliasError { cutoff: u32, nyquist: u32 },

    #[error("quadrature failed to stabilize: {what}")]
    QuadratureDivergence { what: String },

    #[error("radial tail estimate {tail:.3e} exceeds tolerance {tol:.3e}; integrand not integrable on the box")]
    NonIntegrable { tail: f64, tol: f64 },

    #[error("section components inconsistent on the chart overlap: residual {residual:.3e}")]
    InconsistentSection { residual: f64 },

    #[error("bad configuration: {0}")]
    Config(String),
}
