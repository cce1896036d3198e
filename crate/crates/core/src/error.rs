use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by series construction and the check harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("division by the zero series")]
    DivisionByZeroSeries,

    #[error("truncation order {0} is not positive after adjustment")]
    EmptyTruncation(String),

    #[error("denominator vanishes at q = 0 after substitution: factor (1 - {0})")]
    VanishingDenominator(String),

    #[error("polynomial is not a monomial times a product of binomials: {0}")]
    NotFactorable(String),

    #[error("coefficient at q^{0} is not polynomial; monomial extraction refused")]
    NonPolynomialCoefficient(String),

    #[error("request beyond truncation: q^{requested} with order {order}")]
    BeyondTruncation { requested: String, order: String },

    #[error("cyclotomic order mismatch: {0} vs {1}")]
    CycloOrderMismatch(u32, u32),

    #[error("root of unity e^(2 pi i {0}) is not in the cyclotomic field of order {1}")]
    RootNotInField(String, u32),

    #[error("jet has a pole part; log is undefined")]
    JetLogPole,

    #[error("jet exp requires strictly positive W-support")]
    JetExpPole,

    #[error("coefficient table too short: need rows up to n = {need}, have {have}")]
    TableTooShort { need: String, have: String },

    #[error("query past the stored table bound: n = {0}")]
    PastTableBound(String),

    #[error("check window too small: certified order {certified} below requested {requested}")]
    WindowTooSmall { certified: String, requested: String },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("offset {0} outside the band 0 < |a - b| < 1")]
    OffsetOutsideBand(String),

    #[error("weight cutoff {have} insufficient; need at least {need}")]
    CutoffInsufficient { need: String, have: String },

    #[error("unknown form name: {0}")]
    UnknownForm(String),

    #[error("unknown suite: {0}")]
    UnknownSuite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
