//! Bundled specifications and scenarios.

/// The road-closures case study: three process models, one service.
pub const ROAD_CLOSURES: &str = include_str!("../fixtures/road_closures.btw");

/// One specification that satisfies a rule and one that breaks only that
/// rule, per diagnostic code: `(code, pass, fail)`.
pub const AXIOMS: [(&str, &str, &str); 18] = [
    ("V001", include_str!("../fixtures/axioms/V001_pass.btw"), include_str!("../fixtures/axioms/V001_fail.btw")),
    ("V002", include_str!("../fixtures/axioms/V002_pass.btw"), include_str!("../fixtures/axioms/V002_fail.btw")),
    ("V003", include_str!("../fixtures/axioms/V003_pass.btw"), include_str!("../fixtures/axioms/V003_fail.btw")),
    ("V004", include_str!("../fixtures/axioms/V004_pass.btw"), include_str!("../fixtures/axioms/V004_fail.btw")),
    ("V005", include_str!("../fixtures/axioms/V005_pass.btw"), include_str!("../fixtures/axioms/V005_fail.btw")),
    ("V006", include_str!("../fixtures/axioms/V006_pass.btw"), include_str!("../fixtures/axioms/V006_fail.btw")),
    ("V007", include_str!("../fixtures/axioms/V007_pass.btw"), include_str!("../fixtures/axioms/V007_fail.btw")),
    ("V008", include_str!("../fixtures/axioms/V008_pass.btw"), include_str!("../fixtures/axioms/V008_fail.btw")),
    ("V009", include_str!("../fixtures/axioms/V009_pass.btw"), include_str!("../fixtures/axioms/V009_fail.btw")),
    ("V010", include_str!("../fixtures/axioms/V010_pass.btw"), include_str!("../fixtures/axioms/V010_fail.btw")),
    ("V011", include_str!("../fixtures/axioms/V011_pass.btw"), include_str!("../fixtures/axioms/V011_fail.btw")),
    ("V012", include_str!("../fixtures/axioms/V012_pass.btw"), include_str!("../fixtures/axioms/V012_fail.btw")),
    ("V013", include_str!("../fixtures/axioms/V013_pass.btw"), include_str!("../fixtures/axioms/V013_fail.btw")),
    ("V014", include_str!("../fixtures/axioms/V014_pass.btw"), include_str!("../fixtures/axioms/V014_fail.btw")),
    ("V015", include_str!("../fixtures/axioms/V015_pass.btw"), include_str!("../fixtures/axioms/V015_fail.btw")),
    ("V016", include_str!("../fixtures/axioms/V016_pass.btw"), include_str!("../fixtures/axioms/V016_fail.btw")),
    ("V017", include_str!("../fixtures/axioms/V017_pass.btw"), include_str!("../fixtures/axioms/V017_fail.btw")),
    ("V018", include_str!("../fixtures/axioms/V018_pass.btw"), include_str!("../fixtures/axioms/V018_fail.btw")),
];

/// Scenarios for [`ROAD_CLOSURES`].
pub mod scenarios {
    /// Reaches "Title issued".
    pub const HAPPY: &str = include_str!("../fixtures/scenarios/happy.jsonl");
    /// Incomplete application, rejected by the delegate.
    pub const REJECTION: &str = include_str!("../fixtures/scenarios/rejection.jsonl");
    /// Business abort during "Process Views".
    pub const ROLLBACK: &str = include_str!("../fixtures/scenarios/rollback.jsonl");
}
