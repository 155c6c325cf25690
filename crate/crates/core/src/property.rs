//! Postconditions: DNF formulas of linear inequalities over network outputs.
//!
//! A postcondition holds on an output vector `y` when some disjunct has all
//! of its atoms satisfied. Each atom compares `coeffs . y + offset` against
//! zero with one of the four relations. Strict and non-strict relations are
//! preserved exactly; on a discrete grid they are decidable per point with
//! no tolerance.

use crate::domain::InputDomain;
use crate::error::{Error, Result};
use crate::network::Network;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "LT")]
    Lt,
    #[serde(rename = "LE")]
    Le,
    #[serde(rename = "GT")]
    Gt,
    #[serde(rename = "GE")]
    Ge,
}

impl Relation {
    /// The complementary relation: LT<->GE, LE<->GT.
    pub fn complement(self) -> Relation {
        match self {
            Relation::Lt => Relation::Ge,
            Relation::Le => Relation::Gt,
            Relation::Gt => Relation::Le,
            Relation::Ge => Relation::Lt,
        }
    }

    #[inline]
    pub fn holds(self, v: f64) -> bool {
        match self {
            Relation::Lt => v < 0.0,
            Relation::Le => v <= 0.0,
            Relation::Gt => v > 0.0,
            Relation::Ge => v >= 0.0,
        }
    }
}

/// A single linear inequality `coeffs . y + offset REL 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearAtom {
    pub coeffs: Vec<f64>,
    pub offset: f64,
    pub relation: Relation,
}

impl LinearAtom {
    pub fn new(coeffs: Vec<f64>, offset: f64, relation: Relation) -> Self {
        LinearAtom { coeffs, offset, relation }
    }

    #[inline]
    pub fn value(&self, y: &[f64]) -> f64 {
        self.coeffs.iter().zip(y).map(|(c, v)| c * v).sum::<f64>() + self.offset
    }

    pub fn holds(&self, y: &[f64]) -> bool {
        self.relation.holds(self.value(y))
    }

    fn complement(&self) -> LinearAtom {
        LinearAtom {
            coeffs: self.coeffs.clone(),
            offset: self.offset,
            relation: self.relation.complement(),
        }
    }
}

/// Default cap on the DNF size produced by [`Postcondition::negate`].
pub const DEFAULT_NEGATION_TERM_LIMIT: usize = 10_000;

/// Disjunctive normal form: a nonempty sequence of conjunctions of atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Postcondition {
    pub disjuncts: Vec<Vec<LinearAtom>>,
}

impl Postcondition {
    pub fn new(disjuncts: Vec<Vec<LinearAtom>>) -> Result<Self> {
        if disjuncts.is_empty() || disjuncts.iter().any(Vec::is_empty) {
            return Err(Error::Schema {
                path: "output_constraints".into(),
                msg: "disjuncts and conjunctions must be nonempty".into(),
            });
        }
        Ok(Postcondition { disjuncts })
    }

    /// Convenience: a single-atom condition.
    pub fn atom(atom: LinearAtom) -> Self {
        Postcondition { disjuncts: vec![vec![atom]] }
    }

    pub fn output_dim(&self) -> usize {
        self.disjuncts[0][0].coeffs.len()
    }

    /// True iff some disjunct has all atoms satisfied at `y`.
    pub fn eval(&self, y: &[f64]) -> bool {
        self.disjuncts.iter().any(|conj| conj.iter().all(|a| a.holds(y)))
    }

    /// Pointwise logical negation, re-normalized to DNF by De Morgan: one
    /// complemented atom is chosen from each disjunct, so the result has
    /// `prod(|disjunct|)` terms. Refused beyond `term_limit`.
    pub fn negate(&self, term_limit: usize) -> Result<Postcondition> {
        let mut terms: usize = 1;
        for conj in &self.disjuncts {
            terms = terms.saturating_mul(conj.len());
            if terms > term_limit {
                return Err(Error::NegationTooLarge { limit: term_limit });
            }
        }
        let mut result: Vec<Vec<LinearAtom>> = vec![Vec::new()];
        for conj in &self.disjuncts {
            let mut next = Vec::with_capacity(result.len() * conj.len());
            for partial in &result {
                for atom in conj {
                    let mut extended = partial.clone();
                    extended.push(atom.complement());
                    next.push(extended);
                }
            }
            result = next;
        }
        Postcondition::new(result)
    }
}

/// A complete verification instance: the network, the discretized
/// precondition and the postcondition, dimensionally consistent.
#[derive(Debug, Clone)]
pub struct VerificationInstance {
    pub network: Network,
    pub domain: InputDomain,
    pub post: Postcondition,
}

impl VerificationInstance {
    pub fn new(network: Network, domain: InputDomain, post: Postcondition) -> Result<Self> {
        if domain.dim() != network.input_dim() {
            return Err(Error::ShapeMismatch {
                expected: network.input_dim(),
                got: domain.dim(),
            });
        }
        for conj in &post.disjuncts {
            for atom in conj {
                if atom.coeffs.len() != network.output_dim() {
                    return Err(Error::ShapeMismatch {
                        expected: network.output_dim(),
                        got: atom.coeffs.len(),
                    });
                }
                if !atom.offset.is_finite() || atom.coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Schema {
                        path: "output_constraints".into(),
                        msg: "non-finite atom coefficient".into(),
                    });
                }
            }
        }
        Ok(VerificationInstance { network, domain, post })
    }

    /// Same instance with the postcondition negated.
    pub fn negated(&self, term_limit: usize) -> Result<VerificationInstance> {
        Ok(VerificationInstance {
            network: self.network.clone(),
            domain: self.domain.clone(),
            post: self.post.negate(term_limit)?,
        })
    }

    /// Is this grid point a violation point?
    pub fn violates(&self, x: &[f64]) -> Result<bool> {
        Ok(self.post.eval(&self.network.forward(x)?))
    }
}

// ---------------------------------------------------------------------------
// Property files

/// Axis bounds as written in property JSON; the discretization pitch comes
/// from configuration, not the file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxisBounds {
    pub lo: f64,
    pub hi: f64,
}

/// Parsed property file: input bounds plus the postcondition DNF.
#[derive(Debug, Clone)]
pub struct PropertySpec {
    pub input: Vec<AxisBounds>,
    pub post: Postcondition,
}

impl PropertySpec {
    pub fn domain(&self, step: f64) -> Result<InputDomain> {
        let bounds: Vec<_> = self.input.iter().map(|b| (b.lo, b.hi)).collect();
        InputDomain::from_bounds(&bounds, step)
    }
}

#[derive(Deserialize, Serialize)]
struct PropertyFile {
    input: Vec<AxisBounds>,
    output_constraints: Vec<Vec<ConstraintEntry>>,
}

/// One entry of a conjunction: either a literal atom or a macro that
/// expands to several atoms. `"argmax_is k"` expands to `y_k - y_j >= 0`
/// for all `j != k` (ties count as maximal); the `_strict` forms use the
/// strict relation. `n_outputs` must accompany macros so the expansion
/// knows the output arity.
#[derive(Deserialize, Serialize)]
#[serde(untagged)]
enum ConstraintEntry {
    Atom(LinearAtom),
    Macro(String),
}

fn expand_macro(text: &str, n_outputs: usize) -> Result<Vec<LinearAtom>> {
    let mut parts = text.split_whitespace();
    let (name, index) = (parts.next().unwrap_or(""), parts.next());
    let index: usize = index
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Schema {
            path: "output_constraints".into(),
            msg: format!("macro {text:?} needs an output index"),
        })?;
    if index >= n_outputs {
        return Err(Error::Schema {
            path: "output_constraints".into(),
            msg: format!("macro index {index} out of range for {n_outputs} outputs"),
        });
    }
    let (sign, relation) = match name {
        "argmax_is" => (1.0, Relation::Ge),
        "argmax_is_strict" => (1.0, Relation::Gt),
        "argmin_is" => (-1.0, Relation::Ge),
        "argmin_is_strict" => (-1.0, Relation::Gt),
        other => {
            return Err(Error::Schema {
                path: "output_constraints".into(),
                msg: format!("unknown macro {other:?}"),
            })
        }
    };
    Ok((0..n_outputs)
        .filter(|&j| j != index)
        .map(|j| {
            let mut coeffs = vec![0.0; n_outputs];
            coeffs[index] = sign;
            coeffs[j] = -sign;
            LinearAtom::new(coeffs, 0.0, relation)
        })
        .collect())
}

pub fn load_property(path: &Path, n_outputs: usize) -> Result<PropertySpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    parse_property(&text, n_outputs)
}

/// Parse property JSON. `n_outputs` is the network's output arity, used to
/// expand macros and to validate atom widths.
pub fn parse_property(text: &str, n_outputs: usize) -> Result<PropertySpec> {
    let file: PropertyFile = serde_json::from_str(text)
        .map_err(|e| Error::Schema { path: format!("$ (line {})", e.line()), msg: e.to_string() })?;
    if file.input.is_empty() {
        return Err(Error::Schema { path: "$.input".into(), msg: "no input axes".into() });
    }
    for (i, b) in file.input.iter().enumerate() {
        if !(b.lo.is_finite() && b.hi.is_finite() && b.lo <= b.hi) {
            return Err(Error::Schema {
                path: format!("$.input[{i}]"),
                msg: format!("bad bounds [{}, {}]", b.lo, b.hi),
            });
        }
    }
    let mut disjuncts = Vec::with_capacity(file.output_constraints.len());
    for (d, conj) in file.output_constraints.iter().enumerate() {
        let mut atoms = Vec::new();
        for entry in conj {
            match entry {
                ConstraintEntry::Atom(a) => {
                    if a.coeffs.len() != n_outputs {
                        return Err(Error::Schema {
                            path: format!("$.output_constraints[{d}]"),
                            msg: format!(
                                "atom has {} coefficients, network has {n_outputs} outputs",
                                a.coeffs.len()
                            ),
                        });
                    }
                    atoms.push(a.clone());
                }
                ConstraintEntry::Macro(m) => atoms.extend(expand_macro(m, n_outputs)?),
            }
        }
        disjuncts.push(atoms);
    }
    Ok(PropertySpec { input: file.input, post: Postcondition::new(disjuncts)? })
}
