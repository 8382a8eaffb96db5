//! Brute-force references and seeded instance generators.
//!
//! Everything here is deliberately naive. The enumerator walks the whole
//! domain product under an explicit budget; the generators build instances
//! that are invariant under their operation by construction, from a seed, so
//! any corpus is reproducible from the seed alone. Tests use these as ground
//! truth for the solvers.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{OperationTable, Value};
use crate::instance::{AssignmentMap, Instance};

/// Cap for [`enumerate_solutions`]: assignments, not solutions.
pub const DEFAULT_BUDGET: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("assignment space of size {space} exceeds the budget {budget}")]
    BudgetExceeded { space: u128, budget: u128 },
}

/// Number of total assignments respecting the domains.
pub fn solution_space(inst: &Instance) -> u128 {
    (0..inst.n())
        .map(|v| inst.domain(v).len() as u128)
        .fold(1u128, |acc, d| acc.saturating_mul(d))
}

/// All solutions in ascending assignment order, or an error when the
/// assignment space exceeds `budget`.
pub fn enumerate_solutions(
    inst: &Instance,
    budget: u128,
) -> Result<Vec<AssignmentMap>, OracleError> {
    let space = solution_space(inst);
    if space > budget {
        return Err(OracleError::BudgetExceeded { space, budget });
    }
    let n = inst.n();
    let mut out = Vec::new();
    if space == 0 {
        return Ok(out);
    }
    let mut idx = vec![0usize; n];
    'outer: loop {
        let m = AssignmentMap::new(
            idx.iter()
                .enumerate()
                .map(|(v, &i)| inst.domain(v)[i])
                .collect(),
        );
        if inst.is_homomorphism(&m) {
            out.push(m);
        }
        for v in (0..n).rev() {
            idx[v] += 1;
            if idx[v] < inst.domain(v).len() {
                continue 'outer;
            }
            idx[v] = 0;
            if v == 0 {
                break 'outer;
            }
        }
    }
    Ok(out)
}

/// A seeded instance with the operation that preserves it by construction.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub instance: Instance,
    pub op: OperationTable,
    /// Family, seed, and parameters; enough to regenerate the instance.
    pub label: String,
    /// A solution known at generation time, when one was planted.
    pub planted: Option<AssignmentMap>,
}

fn random_pair(rng: &mut ChaCha8Rng, n: usize) -> (usize, usize) {
    let u = rng.gen_range(0..n);
    let mut v = rng.gen_range(0..n - 1);
    if v >= u {
        v += 1;
    }
    (u, v)
}

/// Shift equations `x_to = x_from + c (mod p)` with full domains.
///
/// Satisfiable instances take every shift from a planted assignment. The
/// unsatisfiable variant (needs `n >= 3` and `m >= 3`) spends its last three
/// edges on a cycle whose shifts sum to a nonzero constant.
pub fn gen_lin_p(seed: u64, n: usize, p: u8, m: usize, satisfiable: bool) -> GeneratedInstance {
    assert!(p >= 2, "shift equations need a modulus of at least 2");
    assert!(n >= 2, "shift equations need two variables");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted = AssignmentMap::new((0..n).map(|_| rng.gen_range(0..p)).collect());
    let modp = |x: u16| (x % p as u16) as u8;
    let shift_rel =
        |c: u8| -> Vec<(Value, Value)> { (0..p).map(|a| (a, modp(a as u16 + c as u16))).collect() };
    let shift_for =
        |u: usize, v: usize| modp(p as u16 + planted.get(v) as u16 - planted.get(u) as u16);

    let consistent = if satisfiable { m } else { m.saturating_sub(3) };
    let mut edges = Vec::with_capacity(m);
    for _ in 0..consistent {
        let (u, v) = random_pair(&mut rng, n);
        edges.push((u, v, shift_rel(shift_for(u, v))));
    }
    if !satisfiable {
        assert!(
            n >= 3 && m >= 3,
            "an unsatisfiable cycle needs three variables and three edges"
        );
        let mut vars: Vec<usize> = (0..n).collect();
        vars.shuffle(&mut rng);
        let (u, v, w) = (vars[0], vars[1], vars[2]);
        let delta = rng.gen_range(1..p);
        edges.push((u, v, shift_rel(shift_for(u, v))));
        edges.push((v, w, shift_rel(shift_for(v, w))));
        edges.push((w, u, shift_rel(modp(shift_for(w, u) as u16 + delta as u16))));
    }
    let domains = (0..n).map(|_| (0..p).collect()).collect();
    let instance = Instance::from_parts(n, p as usize, domains, edges)
        .expect("generated edges respect the full domains");
    GeneratedInstance {
        instance,
        op: OperationTable::affine_maltsev(p as usize),
        label: format!("lin_p(seed={seed},n={n},p={p},m={m},sat={satisfiable})"),
        planted: satisfiable.then_some(planted),
    }
}

/// Closure of `seed` under componentwise addition in `Z_4 x Z_4`.
fn subgroup_z4(seed: &[(u8, u8)]) -> Vec<(u8, u8)> {
    let mut members = vec![(0u8, 0u8)];
    loop {
        let mut grew = false;
        for i in 0..members.len() {
            for s in seed {
                let sum = ((members[i].0 + s.0) % 4, (members[i].1 + s.1) % 4);
                if !members.contains(&sum) {
                    members.push(sum);
                    grew = true;
                }
            }
        }
        if !grew {
            members.sort_unstable();
            return members;
        }
    }
}

/// Coset constraints over `Z_4`: every domain is a coset of a subgroup of
/// `Z_4`, every relation a coset of a subgroup of `Z_4 x Z_4`, clipped to
/// the endpoint domains. Satisfiability is not controlled; an oracle decides.
pub fn gen_coset(seed: u64, n: usize, m: usize) -> GeneratedInstance {
    assert!(n >= 2, "coset constraints need two variables");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut domains: Vec<Vec<Value>> = Vec::with_capacity(n);
    for _ in 0..n {
        let t = rng.gen_range(0..4u8);
        domains.push(match rng.gen_range(0..4u8) {
            0 => vec![t],
            1 => {
                let mut d = vec![t, (t + 2) % 4];
                d.sort_unstable();
                d
            }
            _ => vec![0, 1, 2, 3],
        });
    }
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (u, v) = random_pair(&mut rng, n);
        let gens: Vec<(u8, u8)> = (0..rng.gen_range(0..=2usize))
            .map(|_| (rng.gen_range(0..4u8), rng.gen_range(0..4u8)))
            .collect();
        let subgroup = subgroup_z4(&gens);
        let (t1, t2) = (rng.gen_range(0..4u8), rng.gen_range(0..4u8));
        let rel: Vec<(Value, Value)> = subgroup
            .iter()
            .map(|&(h1, h2)| ((h1 + t1) % 4, (h2 + t2) % 4))
            .filter(|&(a, b)| domains[u].contains(&a) && domains[v].contains(&b))
            .collect();
        edges.push((u, v, rel));
    }
    let instance =
        Instance::from_parts(n, 4, domains, edges).expect("relations clipped to domains");
    GeneratedInstance {
        instance,
        op: OperationTable::affine_maltsev(4),
        label: format!("coset(seed={seed},n={n},m={m})"),
        planted: None,
    }
}

/// Closure of a pair set under the componentwise operation.
fn close_pairs(pairs: &[(Value, Value)], op: &OperationTable) -> Vec<(Value, Value)> {
    let mut members: Vec<(Value, Value)> = pairs.to_vec();
    members.sort_unstable();
    members.dedup();
    loop {
        let mut grew = false;
        let len = members.len();
        for i in 0..len {
            for j in 0..len {
                for k in 0..len {
                    let pair = (
                        op.eval3(members[i].0, members[j].0, members[k].0),
                        op.eval3(members[i].1, members[j].1, members[k].1),
                    );
                    if !members.contains(&pair) {
                        members.push(pair);
                        grew = true;
                    }
                }
            }
        }
        if !grew {
            members.sort_unstable();
            return members;
        }
    }
}

/// Random relations closed under `x - y + z (mod q)`, with occasional
/// singleton domains. Satisfiability is not controlled; an oracle decides.
pub fn gen_random_invariant(seed: u64, n: usize, q: u8, m: usize) -> GeneratedInstance {
    assert!(n >= 2, "relations need two variables");
    assert!(q >= 2, "closure needs a modulus of at least 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let op = OperationTable::affine_maltsev(q as usize);
    let mut domains: Vec<Vec<Value>> = Vec::with_capacity(n);
    for _ in 0..n {
        if rng.gen_bool(0.25) {
            domains.push(vec![rng.gen_range(0..q)]);
        } else {
            domains.push((0..q).collect());
        }
    }
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (u, v) = random_pair(&mut rng, n);
        let mut pairs: Vec<(Value, Value)> = (0..q)
            .flat_map(|a| (0..q).map(move |b| (a, b)))
            .filter(|_| rng.gen_bool(0.5))
            .collect();
        if pairs.is_empty() {
            pairs.push((rng.gen_range(0..q), rng.gen_range(0..q)));
        }
        let rel: Vec<(Value, Value)> = close_pairs(&pairs, &op)
            .into_iter()
            .filter(|&(a, b)| domains[u].contains(&a) && domains[v].contains(&b))
            .collect();
        edges.push((u, v, rel));
    }
    let instance =
        Instance::from_parts(n, q as usize, domains, edges).expect("relations clipped to domains");
    GeneratedInstance {
        instance,
        op,
        label: format!("random_invariant(seed={seed},n={n},q={q},m={m})"),
        planted: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::check_compatibility;

    #[test]
    fn enumerates_equality_chain() {
        let eq = vec![(0, 0), (1, 1)];
        let inst = Instance::from_parts(
            3,
            2,
            vec![vec![0, 1]; 3],
            vec![(0, 1, eq.clone()), (1, 2, eq)],
        )
        .unwrap();
        let sols = enumerate_solutions(&inst, DEFAULT_BUDGET).unwrap();
        assert_eq!(
            sols,
            vec![
                AssignmentMap::new(vec![0, 0, 0]),
                AssignmentMap::new(vec![1, 1, 1]),
            ]
        );
    }

    #[test]
    fn budget_is_enforced() {
        let inst = Instance::from_parts(4, 4, vec![(0..4).collect(); 4], vec![]).unwrap();
        assert_eq!(
            enumerate_solutions(&inst, 100),
            Err(OracleError::BudgetExceeded {
                space: 256,
                budget: 100
            })
        );
        assert_eq!(enumerate_solutions(&inst, 256).unwrap().len(), 256);
    }

    #[test]
    fn empty_domain_has_no_solutions() {
        let inst = Instance::from_parts(2, 2, vec![vec![0, 1], vec![]], vec![]).unwrap();
        assert_eq!(solution_space(&inst), 0);
        assert!(enumerate_solutions(&inst, 10).unwrap().is_empty());
    }

    #[test]
    fn lin_p_plants_a_solution_and_cycles_kill_it() {
        for seed in 0..30u64 {
            let sat = gen_lin_p(seed, 5, 3, 8, true);
            let planted = sat.planted.unwrap();
            assert!(sat.instance.is_homomorphism(&planted), "{}", sat.label);
            check_compatibility(&sat.instance, &sat.op).unwrap();

            let unsat = gen_lin_p(seed, 5, 3, 8, false);
            check_compatibility(&unsat.instance, &unsat.op).unwrap();
            let sols = enumerate_solutions(&unsat.instance, DEFAULT_BUDGET).unwrap();
            assert!(sols.is_empty(), "{}", unsat.label);
        }
    }

    #[test]
    fn coset_and_random_instances_are_invariant() {
        for seed in 0..30u64 {
            let g = gen_coset(seed, 5, 7);
            check_compatibility(&g.instance, &g.op).unwrap();
            let r2 = gen_random_invariant(seed, 5, 2, 7);
            check_compatibility(&r2.instance, &r2.op).unwrap();
            let r3 = gen_random_invariant(seed, 5, 3, 7);
            check_compatibility(&r3.instance, &r3.op).unwrap();
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_coset(42, 6, 9);
        let b = gen_coset(42, 6, 9);
        assert_eq!(a.instance, b.instance);
        assert_eq!(a.label, b.label);
        let a = gen_lin_p(7, 4, 2, 6, false);
        let b = gen_lin_p(7, 4, 2, 6, false);
        assert_eq!(a.instance, b.instance);
    }
}
