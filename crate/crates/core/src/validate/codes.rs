use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodeInfo {
    pub code: &'static str,
    pub title: &'static str,
    /// The rule, stated over the model.
    pub statement: &'static str,
    /// Where the rule comes from in the metamodel.
    pub anchor: &'static str,
    /// Smallest specification that breaks the rule.
    pub example: &'static str,
    pub warning: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown diagnostic code `{0}`")]
pub struct UnknownCode(pub String);

macro_rules! fixture {
    ($code:literal) => {
        include_str!(concat!("../../fixtures/axioms/", $code, "_fail.btw"))
    };
}

pub const CODES: [CodeInfo; 18] = [
    CodeInfo {
        code: "V001",
        title: "entity kinds are disjoint",
        statement: "Every processing entity is exactly one of process, decision or synchroniser, and uses only \
                    features of its kind: outcome rules, terminators and outcome-labelled triggers belong to \
                    decisions; synchronisers have no body; a composite has no steps of its own.",
        anchor: "partition of processing entities",
        example: fixture!("V001"),
        warning: false,
    },
    CodeInfo {
        code: "V002",
        title: "one top-level process per model, non-empty initial sets",
        statement: "Each model block has exactly one top-level entity, which is a process, and every \
                    decomposition names at least one initial entity.",
        anchor: "decomposition: top-level process and Init",
        example: fixture!("V002"),
        warning: false,
    },
    CodeInfo {
        code: "V003",
        title: "triggers stay inside their decomposition",
        statement: "Both ends of a trigger, every initial entity and every commit-group member are children \
                    of the decomposition that declares them.",
        anchor: "decomposition: Trig is local",
        example: fixture!("V003"),
        warning: false,
    },
    CodeInfo {
        code: "V004",
        title: "direct messaging stays inside a decomposition",
        statement: "Two entities exchanging messages directly are siblings in the same decomposition.",
        anchor: "decomposition: Mes is local",
        example: fixture!("V004"),
        warning: false,
    },
    CodeInfo {
        code: "V005",
        title: "complex decisions decompose into decisions",
        statement: "The children of a decision's decomposition are decisions or synchronisers.",
        anchor: "complex decision",
        example: fixture!("V005"),
        warning: false,
    },
    CodeInfo {
        code: "V006",
        title: "process and decision names are distinct per level",
        statement: "Within one decomposition, and among top-level entities, no name denotes both a process \
                    and a decision.",
        anchor: "naming of processing entities",
        example: fixture!("V006"),
        warning: false,
    },
    CodeInfo {
        code: "V007",
        title: "local variables and used storage are disjoint",
        statement: "An entity's local variable names and the names of the storage entities it uses do not \
                    overlap.",
        anchor: "Locvar and Locse",
        example: fixture!("V007"),
        warning: false,
    },
    CodeInfo {
        code: "V008",
        title: "storage access is declared by the enclosing entity",
        statement: "Every storage entity an entity reads, writes or uses is among those used by its \
                    enclosing composite.",
        anchor: "Consume and Produce within Locse of Sup",
        example: fixture!("V008"),
        warning: false,
    },
    CodeInfo {
        code: "V009",
        title: "buffers carry only allocated message types",
        statement: "Messages put into or taken from a buffer are allocated to it, and a predicate buffer's \
                    ordering field exists in each allocated message type.",
        anchor: "MesAlloc",
        example: fixture!("V009"),
        warning: false,
    },
    CodeInfo {
        code: "V010",
        title: "remote messaging targets services",
        statement: "Messages leaving the process model go to services; remote services reach an entity \
                    only through the local service; synchronous calls go to services.",
        anchor: "remote messaging",
        example: fixture!("V010"),
        warning: false,
    },
    CodeInfo {
        code: "V011",
        title: "synchronous exchanges send first",
        statement: "A synchronous exchange sends its request before waiting for the reply.",
        anchor: "synchronous messaging",
        example: fixture!("V011"),
        warning: false,
    },
    CodeInfo {
        code: "V012",
        title: "service states are reachable",
        statement: "Every state of a service model is reachable from birth, and death is reachable from \
                    every state.",
        anchor: "service state machine",
        example: fixture!("V012"),
        warning: true,
    },
    CodeInfo {
        code: "V013",
        title: "ECA rules are well-formed",
        statement: "States, messages and entities named by a rule exist and have the kind the event or \
                    action needs; no transition enters birth and none leaves death.",
        anchor: "ECA rules",
        example: fixture!("V013"),
        warning: false,
    },
    CodeInfo {
        code: "V014",
        title: "recovery entries are consistent",
        statement: "A recovery entry names an existing entity; decisions are not rolled back; a \
                    compensation exists and differs from its subject; ladder thresholds strictly increase \
                    with at most one unbounded rung, placed last.",
        anchor: "recovery: redo ladder and rollback",
        example: fixture!("V014"),
        warning: false,
    },
    CodeInfo {
        code: "V015",
        title: "actors sit where their processes run",
        statement: "An actor assigned a role undertaking a process is located in the unit structuring that \
                    process, or below it unless allocation is strict.",
        anchor: "allocation axiom",
        example: fixture!("V015"),
        warning: false,
    },
    CodeInfo {
        code: "V016",
        title: "the organisation is a forest",
        statement: "Sub-unit placement forms no cycle.",
        anchor: "subOf",
        example: fixture!("V016"),
        warning: false,
    },
    CodeInfo {
        code: "V017",
        title: "stores are homogeneous",
        statement: "A store holds only material objects or only informational objects.",
        anchor: "object nature",
        example: fixture!("V017"),
        warning: false,
    },
    CodeInfo {
        code: "V018",
        title: "only processes are exclusive",
        statement: "The exclusive marker applies to processes.",
        anchor: "exclusive processes",
        example: fixture!("V018"),
        warning: false,
    },
];

pub fn explain(code: &str) -> Result<&'static CodeInfo, UnknownCode> {
    let code = code.trim().to_ascii_uppercase();
    CODES.iter().find(|c| c.code == code).ok_or(UnknownCode(code))
}
