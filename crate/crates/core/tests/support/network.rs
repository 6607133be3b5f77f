//! Random complex-decision networks, rendered as specifications, and a
//! brute-force evaluator that does not use the engine.

use std::collections::VecDeque;
use std::fmt::Write;

use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum O {
    Pos,
    Neg,
}

impl O {
    fn word(self) -> &'static str {
        match self {
            O::Pos => "positive",
            O::Neg => "negative",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Term {
    pub on: O,
    pub result: O,
    pub abort: bool,
}

#[derive(Clone, Debug)]
pub enum Node {
    Decision(usize),
    Join,
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub from: Node,
    pub on: Option<O>,
    pub to: Node,
}

#[derive(Clone, Debug)]
pub struct Network {
    pub n: usize,
    pub initial: Vec<usize>,
    pub terms: Vec<Vec<Term>>,
    pub edges: Vec<Edge>,
}

fn outcome(rng: &mut impl Rng) -> O {
    if rng.gen_bool(0.5) {
        O::Pos
    } else {
        O::Neg
    }
}

fn label(rng: &mut impl Rng) -> Option<O> {
    match rng.gen_range(0..3) {
        0 => None,
        1 => Some(O::Pos),
        _ => Some(O::Neg),
    }
}

/// Acyclic network of `n` simple decisions. Every abort terminator has the
/// same result so the outcome does not depend on interleaving.
pub fn generate(n: usize, rng: &mut impl Rng) -> Network {
    let mut initial: Vec<usize> = (0..n).filter(|&i| i == 0 || rng.gen_bool(0.25)).collect();
    initial.dedup();
    let abort_result = outcome(rng);
    let mut terms = vec![Vec::new(); n];
    for t in terms.iter_mut() {
        for on in [O::Pos, O::Neg] {
            if rng.gen_bool(0.35) {
                let abort = rng.gen_bool(0.3);
                t.push(Term { on, result: if abort { abort_result } else { outcome(rng) }, abort });
            }
        }
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.35) {
                edges.push(Edge { from: Node::Decision(i), on: label(rng), to: Node::Decision(j) });
            }
        }
    }
    if n >= 3 && rng.gen_bool(0.4) {
        let a = rng.gen_range(0..n - 2);
        let b = rng.gen_range(a + 1..n - 1);
        let out = rng.gen_range(b + 1..n);
        edges.push(Edge { from: Node::Decision(a), on: label(rng), to: Node::Join });
        edges.push(Edge { from: Node::Decision(b), on: label(rng), to: Node::Join });
        edges.push(Edge { from: Node::Join, on: None, to: Node::Decision(out) });
    }
    Network { n, initial, terms, edges }
}

fn node_name(n: &Node) -> String {
    match n {
        Node::Decision(i) => format!("S{i}"),
        Node::Join => "J".into(),
    }
}

impl Network {
    /// A specification whose only root runs the complex decision "D" once a
    /// "Go" message arrives.
    pub fn spec(&self) -> String {
        let mut s = String::from("scope {\n  service \"Svc\";\n  message \"Go\" { }\n}\n\nmodel {\n  process \"Root\" {\n    decision \"D\" {\n");
        for i in 0..self.n {
            let _ = writeln!(s, "      decision \"S{i}\" {{\n        positive when true;\n        negative when true;");
            for t in &self.terms[i] {
                let verb = if t.abort { "aborts" } else { "terminates" };
                let _ = writeln!(s, "        {} {verb} {};", t.on.word(), t.result.word());
            }
            s.push_str("      }\n");
        }
        if self.edges.iter().any(|e| matches!(e.to, Node::Join)) {
            s.push_str("      sync \"J\";\n");
        }
        for i in &self.initial {
            let _ = writeln!(s, "      initial \"S{i}\";");
        }
        for e in &self.edges {
            let on = e.on.map(|o| format!(" {}", o.word())).unwrap_or_default();
            let _ = writeln!(s, "      trigger \"{}\"{on} -> \"{}\";", node_name(&e.from), node_name(&e.to));
        }
        s.push_str("    }\n    initial \"D\";\n  }\n}\n\n");
        s.push_str("service \"Svc\" {\n  on birth when msg_from(\"Go\") then trigger \"Root\";\n  birth -> death when process_end(\"Root\");\n}\n");
        s
    }

    /// Scenario forcing decision `i` to `outcomes[i]` at every evaluation.
    pub fn scenario(&self, outcomes: &[O]) -> String {
        let mut s = String::new();
        for (i, o) in outcomes.iter().enumerate() {
            let _ =
                writeln!(s, r#"{{"t":0,"kind":"override","target":"S{i}","payload":{{"outcome":"{}"}}}}"#, o.word());
        }
        s.push_str("{\"t\":0,\"kind\":\"message\",\"target\":\"Go\"}\n");
        s
    }

    /// Runs the network by hand: a queue of decision runs, join tokens,
    /// votes and terminators.
    pub fn evaluate(&self, outcomes: &[O]) -> O {
        let mut queue: VecDeque<usize> = self.initial.iter().copied().collect();
        let join_inputs: Vec<usize> =
            (0..self.edges.len()).filter(|&k| matches!(self.edges[k].to, Node::Join)).collect();
        let mut tokens = vec![0u32; self.edges.len()];
        let mut votes = Vec::new();
        while let Some(d) = queue.pop_front() {
            let o = outcomes[d];
            let terms: Vec<&Term> = self.terms[d].iter().filter(|t| t.on == o).collect();
            if let Some(t) = terms.iter().find(|t| t.abort) {
                return t.result;
            }
            votes.extend(terms.iter().map(|t| t.result));
            let mut fired = false;
            for (k, e) in self.edges.iter().enumerate() {
                if !matches!(e.from, Node::Decision(f) if f == d) || e.on.is_some_and(|l| l != o) {
                    continue;
                }
                fired = true;
                match e.to {
                    Node::Decision(j) => queue.push_back(j),
                    Node::Join => tokens[k] += 1,
                }
            }
            while !join_inputs.is_empty() && join_inputs.iter().all(|&k| tokens[k] > 0) {
                for &k in &join_inputs {
                    tokens[k] -= 1;
                }
                for e in &self.edges {
                    if let (Node::Join, Node::Decision(j)) = (&e.from, &e.to) {
                        queue.push_back(*j);
                    }
                }
            }
            if terms.is_empty() && !fired {
                votes.push(o);
            }
        }
        if votes.contains(&O::Neg) {
            O::Neg
        } else {
            O::Pos
        }
    }
}

/// All `2^n` outcome vectors.
pub fn all_vectors(n: usize) -> Vec<Vec<O>> {
    (0..1u32 << n).map(|bits| (0..n).map(|i| if bits >> i & 1 == 1 { O::Pos } else { O::Neg }).collect()).collect()
}

pub fn random_vector(n: usize, rng: &mut impl Rng) -> Vec<O> {
    (0..n).map(|_| outcome(rng)).collect()
}
