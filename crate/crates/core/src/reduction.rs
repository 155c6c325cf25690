//! 3-CNF to network compiler.
//!
//! Translates a 3-CNF formula into a verification instance whose violation
//! count equals the formula's model count, via three gadgets: literal
//! evaluation (negation as `1 - x`), per-clause disjunction
//! `u = ReLU(1 - sum of literals)` (so `u = 0` iff the clause is
//! satisfied), and a conjunction output `n - sum(u)` that equals the clause
//! count `n` exactly on satisfying assignments. The domain is the Boolean
//! grid `{0,1}^k` and the postcondition pins the output to `n`.

use crate::domain::InputDomain;
use crate::error::{Error, Result};
use crate::network::{Activation, Layer, Network};
use crate::property::{LinearAtom, Postcondition, Relation, VerificationInstance};
use std::path::Path;

/// A CNF formula with at most three literals per clause, DIMACS signed
/// convention: literal `v` is variable `v` (1-based), `-v` its negation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    pub num_vars: usize,
    pub clauses: Vec<Vec<i32>>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<Vec<i32>>) -> Result<Self> {
        for (i, clause) in clauses.iter().enumerate() {
            if clause.is_empty() {
                return Err(Error::Parse { line: 0, msg: format!("clause {i} is empty") });
            }
            if clause.len() > 3 {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("clause {i} has {} literals; 3-CNF only", clause.len()),
                });
            }
            for &lit in clause {
                let v = lit.unsigned_abs() as usize;
                if lit == 0 || v > num_vars {
                    return Err(Error::Parse {
                        line: 0,
                        msg: format!("clause {i} has out-of-range literal {lit}"),
                    });
                }
            }
        }
        Ok(CnfFormula { num_vars, clauses })
    }

    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|clause| {
            clause.iter().any(|&lit| {
                let v = assignment[lit.unsigned_abs() as usize - 1];
                if lit > 0 {
                    v
                } else {
                    !v
                }
            })
        })
    }
}

/// Count satisfying assignments by truth-table enumeration. Refuses
/// formulas with more than `var_cap` variables.
pub fn brute_sat_count(f: &CnfFormula, var_cap: usize) -> Result<u64> {
    if f.num_vars > var_cap {
        return Err(Error::BudgetRefused(format!(
            "{} variables exceeds enumeration cap {var_cap}",
            f.num_vars
        )));
    }
    let mut count = 0;
    let mut assignment = vec![false; f.num_vars];
    for mask in 0u64..(1u64 << f.num_vars) {
        for (v, slot) in assignment.iter_mut().enumerate() {
            *slot = mask >> v & 1 == 1;
        }
        if f.is_satisfied_by(&assignment) {
            count += 1;
        }
    }
    Ok(count)
}

/// How the gadgets are assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LayerStyle {
    /// Literal, disjunction and conjunction gadgets fused into three layers.
    #[default]
    Fused,
    /// One layer per gadget stage, for inspection.
    PerGadget,
}

/// Compile the formula into a verification instance: violation points of
/// the instance are exactly the satisfying assignments.
pub fn cnf_to_instance(f: &CnfFormula, style: LayerStyle) -> Result<VerificationInstance> {
    let k = f.num_vars;
    let n = f.clauses.len();
    let net = if n == 0 {
        // vacuous formula: constant output 0 = clause count
        Network::new(vec![Layer {
            weights: vec![vec![0.0; k]],
            biases: vec![0.0],
            activation: Activation::Identity,
        }])?
    } else {
        build_network(f, style)?
    };
    let domain = InputDomain::from_bounds(&vec![(0.0, 1.0); k], 1.0)?;
    // output = n, as a two-atom conjunction; the gadget arithmetic is exact
    // in binary floating point for integers of this magnitude
    let target = n as f64;
    let post = Postcondition::new(vec![vec![
        LinearAtom::new(vec![1.0], -target, Relation::Ge),
        LinearAtom::new(vec![1.0], -target, Relation::Le),
    ]])?;
    VerificationInstance::new(net, domain, post)
}

fn build_network(f: &CnfFormula, style: LayerStyle) -> Result<Network> {
    let k = f.num_vars;
    let n = f.clauses.len();

    // literal layer: one ReLU unit per (clause, literal) slot; positive
    // literals pass through, negative become 1 - x (both stay >= 0 on
    // {0,1} inputs)
    let slots: Vec<(usize, i32)> = f
        .clauses
        .iter()
        .enumerate()
        .flat_map(|(c, clause)| clause.iter().map(move |&lit| (c, lit)))
        .collect();
    let mut lit_weights = Vec::with_capacity(slots.len());
    let mut lit_biases = Vec::with_capacity(slots.len());
    for &(_, lit) in &slots {
        let mut row = vec![0.0; k];
        let v = lit.unsigned_abs() as usize - 1;
        if lit > 0 {
            row[v] = 1.0;
            lit_biases.push(0.0);
        } else {
            row[v] = -1.0;
            lit_biases.push(1.0);
        }
        lit_weights.push(row);
    }
    let literal_layer =
        Layer { weights: lit_weights, biases: lit_biases, activation: Activation::Relu };

    // disjunction layer: u_c = ReLU(1 - sum of clause c's literal slots)
    let mut dis_weights = Vec::with_capacity(n);
    for c in 0..n {
        let mut row = vec![0.0; slots.len()];
        for (s, &(sc, _)) in slots.iter().enumerate() {
            if sc == c {
                row[s] = -1.0;
            }
        }
        dis_weights.push(row);
    }
    let disjunction_layer =
        Layer { weights: dis_weights, biases: vec![1.0; n], activation: Activation::Relu };

    match style {
        LayerStyle::Fused => {
            // conjunction fused into the output: y = n - sum(u)
            let output_layer = Layer {
                weights: vec![vec![-1.0; n]],
                biases: vec![n as f64],
                activation: Activation::Identity,
            };
            Network::new(vec![literal_layer, disjunction_layer, output_layer])
        }
        LayerStyle::PerGadget => {
            // per-clause result y_c = 1 - u_c, then the conjunction sum
            let mut eye = Vec::with_capacity(n);
            for c in 0..n {
                let mut row = vec![0.0; n];
                row[c] = -1.0;
                eye.push(row);
            }
            let clause_layer =
                Layer { weights: eye, biases: vec![1.0; n], activation: Activation::Identity };
            let output_layer = Layer {
                weights: vec![vec![1.0; n]],
                biases: vec![0.0],
                activation: Activation::Identity,
            };
            Network::new(vec![literal_layer, disjunction_layer, clause_layer, output_layer])
        }
    }
}

// ---------------------------------------------------------------------------
// DIMACS

pub fn parse_dimacs_file(path: &Path) -> Result<CnfFormula> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    parse_dimacs(&text)
}

pub fn parse_dimacs(text: &str) -> Result<CnfFormula> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    let mut last_line = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        last_line = line;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(Error::Parse { line, msg: "duplicate header".into() });
            }
            let parts: Vec<&str> = trimmed.split_whitespace().collect();
            if parts.len() != 4 || parts[1] != "cnf" {
                return Err(Error::Parse { line, msg: format!("bad header {trimmed:?}") });
            }
            let vars = parts[2]
                .parse()
                .map_err(|_| Error::Parse { line, msg: format!("bad var count {:?}", parts[2]) })?;
            let count = parts[3].parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad clause count {:?}", parts[3]),
            })?;
            header = Some((vars, count));
            continue;
        }
        if header.is_none() {
            return Err(Error::Parse { line, msg: "clause before \"p cnf\" header".into() });
        }
        for tok in trimmed.split_whitespace() {
            let lit: i32 = tok
                .parse()
                .map_err(|_| Error::Parse { line, msg: format!("bad literal {tok:?}") })?;
            if lit == 0 {
                clauses.push(std::mem::take(&mut current));
            } else {
                current.push(lit);
            }
        }
    }
    let (num_vars, num_clauses) =
        header.ok_or(Error::Parse { line: last_line, msg: "missing \"p cnf\" header".into() })?;
    if !current.is_empty() {
        return Err(Error::Parse {
            line: last_line,
            msg: "clause without terminating 0".into(),
        });
    }
    if clauses.len() != num_clauses {
        return Err(Error::Parse {
            line: last_line,
            msg: format!("header promises {num_clauses} clauses, found {}", clauses.len()),
        });
    }
    CnfFormula::new(num_vars, clauses)
}

pub fn print_dimacs(f: &CnfFormula) -> String {
    let mut out = format!("p cnf {} {}\n", f.num_vars, f.clauses.len());
    for clause in &f.clauses {
        for lit in clause {
            out.push_str(&lit.to_string());
            out.push(' ');
        }
        out.push_str("0\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::{Budget, DEFAULT_LEAF_THRESHOLD};
    use crate::exact::count_exact;
    use num_bigint::BigUint;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    fn model_count(f: &CnfFormula, style: LayerStyle) -> u64 {
        let inst = cnf_to_instance(f, style).unwrap();
        count_exact(&inst, Budget::UNLIMITED, DEFAULT_LEAF_THRESHOLD)
            .unwrap()
            .report()
            .unwrap()
            .violations
            .to_u64()
            .unwrap()
    }

    #[test]
    fn unit_clause() {
        let f = CnfFormula::new(1, vec![vec![1]]).unwrap();
        assert_eq!(brute_sat_count(&f, 20).unwrap(), 1);
        assert_eq!(model_count(&f, LayerStyle::Fused), 1);
    }

    #[test]
    fn tautology() {
        let f = CnfFormula::new(1, vec![vec![1, -1]]).unwrap();
        assert_eq!(brute_sat_count(&f, 20).unwrap(), 2);
        assert_eq!(model_count(&f, LayerStyle::Fused), 2);
    }

    #[test]
    fn two_clause_example() {
        // (x1 | x2) & (!x1 | x3): 4 of 8 assignments
        let f = CnfFormula::new(3, vec![vec![1, 2], vec![-1, 3]]).unwrap();
        assert_eq!(brute_sat_count(&f, 20).unwrap(), 4);
        assert_eq!(model_count(&f, LayerStyle::Fused), 4);
        assert_eq!(model_count(&f, LayerStyle::PerGadget), 4);
    }

    #[test]
    fn unsatisfiable() {
        let f = CnfFormula::new(1, vec![vec![1], vec![-1]]).unwrap();
        assert_eq!(brute_sat_count(&f, 20).unwrap(), 0);
        assert_eq!(model_count(&f, LayerStyle::Fused), 0);
    }

    #[test]
    fn empty_clause_list_counts_everything() {
        let f = CnfFormula::new(3, vec![]).unwrap();
        assert_eq!(brute_sat_count(&f, 20).unwrap(), 8);
        assert_eq!(model_count(&f, LayerStyle::Fused), 8);
    }

    #[test]
    fn three_literal_falsifier() {
        let f = CnfFormula::new(3, vec![vec![1, 2, 3]]).unwrap();
        assert_eq!(brute_sat_count(&f, 20).unwrap(), 7);
    }

    #[test]
    fn clause_cap_enforced() {
        assert!(CnfFormula::new(4, vec![vec![1, 2, 3, 4]]).is_err());
    }

    #[test]
    fn output_is_clause_count_iff_satisfied() {
        let f = CnfFormula::new(3, vec![vec![1, -2], vec![2, 3], vec![-1, -3]]).unwrap();
        let inst = cnf_to_instance(&f, LayerStyle::Fused).unwrap();
        let n = f.clauses.len() as f64;
        let mut assignment = vec![false; 3];
        for mask in 0u64..8 {
            for (v, slot) in assignment.iter_mut().enumerate() {
                *slot = mask >> v & 1 == 1;
            }
            let x: Vec<f64> = assignment.iter().map(|&b| b as u64 as f64).collect();
            let y = inst.network.forward(&x).unwrap()[0];
            assert!((0.0..=n).contains(&y), "output {y} out of range");
            assert_eq!(y == n, f.is_satisfied_by(&assignment));
        }
    }

    #[test]
    fn literal_slots_mirror_truth_values() {
        let f = CnfFormula::new(2, vec![vec![1, -2]]).unwrap();
        let net = build_network(&f, LayerStyle::Fused).unwrap();
        let first = &net.layers()[0];
        for (x, expect) in [([0.0, 0.0], [0.0, 1.0]), ([1.0, 1.0], [1.0, 0.0])] {
            let mut vals = Vec::new();
            for (row, b) in first.weights.iter().zip(&first.biases) {
                let v: f64 = row.iter().zip(&x).map(|(w, xi)| w * xi).sum::<f64>() + b;
                vals.push(v.max(0.0));
            }
            assert_eq!(vals, expect);
        }
    }

    #[test]
    fn dimacs_basic() {
        let f = parse_dimacs("p cnf 2 1\n1 -2 0\n").unwrap();
        assert_eq!(f.num_vars, 2);
        assert_eq!(f.clauses, vec![vec![1, -2]]);
    }

    #[test]
    fn dimacs_missing_terminator() {
        assert!(matches!(parse_dimacs("p cnf 2 1\n1 -2\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn instance_total_is_boolean_cube() {
        let f = CnfFormula::new(5, vec![vec![1]]).unwrap();
        let inst = cnf_to_instance(&f, LayerStyle::Fused).unwrap();
        assert_eq!(inst.domain.total_points(), BigUint::from(32u32));
    }

    fn arb_formula() -> impl Strategy<Value = CnfFormula> {
        (1usize..6).prop_flat_map(|num_vars| {
            let lit = (1..=num_vars as i32, proptest::bool::ANY)
                .prop_map(|(v, neg)| if neg { -v } else { v });
            proptest::collection::vec(proptest::collection::vec(lit, 1..=3), 0..6)
                .prop_map(move |clauses| CnfFormula::new(num_vars, clauses).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn dimacs_round_trip(f in arb_formula()) {
            prop_assert_eq!(parse_dimacs(&print_dimacs(&f)).unwrap(), f);
        }

        #[test]
        fn fused_and_per_gadget_agree(f in arb_formula()) {
            let oracle = brute_sat_count(&f, 20).unwrap();
            prop_assert_eq!(model_count(&f, LayerStyle::Fused), oracle);
            prop_assert_eq!(model_count(&f, LayerStyle::PerGadget), oracle);
        }
    }
}
