//! Search problems used by the benchmark goals: Towers of Hanoi move
//! counting, doubly-recursive Fibonacci, and water-jug planning.
//!
//! The jug puzzle: given jugs of fixed capacities, starting empty, measure a
//! target amount by filling, emptying, or pouring between jugs. A state is
//! the tuple of jug contents; the target is reached when some jug holds
//! exactly the target or the combined contents equal it (targets above the
//! largest capacity are only reachable in the combined reading). Moves are
//! generated in a fixed order: fills, then empties, then pours with the
//! source index varying slowest. No-op moves are never generated.
//!
//! All long-running work here calls [`Checkpoint::tick`] so a cancelled
//! enumeration backs out within the checkpoint interval.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

use crate::goal::{Checkpoint, Interrupt};
use crate::term::Term;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum JugStrategy {
    BreadthFirst,
    DepthFirst,
    HillClimbing,
}

impl JugStrategy {
    pub fn label(self) -> &'static str {
        match self {
            JugStrategy::BreadthFirst => "bf",
            JugStrategy::DepthFirst => "df",
            JugStrategy::HillClimbing => "hc",
        }
    }
}

/// One step of a jug plan. Indices are 0-based jug positions.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum JugMove {
    Fill(usize),
    Empty(usize),
    Pour(usize, usize),
}

type JugState = Vec<i64>;

pub(crate) fn hanoi_count(rings: u32, cp: &Checkpoint) -> Result<u64, Interrupt> {
    fn solve(n: u32, cp: &Checkpoint) -> Result<u64, Interrupt> {
        if n == 0 {
            return Ok(0);
        }
        let before = solve(n - 1, cp)?;
        cp.tick()?;
        let after = solve(n - 1, cp)?;
        Ok(before + 1 + after)
    }
    solve(rings, cp)
}

pub(crate) fn fib_naive(n: u32, cp: &Checkpoint) -> Result<u64, Interrupt> {
    cp.tick()?;
    match n {
        0 => Ok(0),
        1 => Ok(1),
        _ => Ok(fib_naive(n - 1, cp)? + fib_naive(n - 2, cp)?),
    }
}

fn satisfies(target: i64, state: &[i64]) -> bool {
    state.contains(&target) || state.iter().sum::<i64>() == target
}

fn successors(caps: &[i64], s: &[i64]) -> Vec<(JugMove, JugState)> {
    let k = caps.len();
    let mut out = Vec::new();
    for i in 0..k {
        if s[i] < caps[i] {
            let mut t = s.to_vec();
            t[i] = caps[i];
            out.push((JugMove::Fill(i), t));
        }
    }
    for i in 0..k {
        if s[i] > 0 {
            let mut t = s.to_vec();
            t[i] = 0;
            out.push((JugMove::Empty(i), t));
        }
    }
    for i in 0..k {
        for j in 0..k {
            if i != j && s[i] > 0 && s[j] < caps[j] {
                let amount = s[i].min(caps[j] - s[j]);
                let mut t = s.to_vec();
                t[i] -= amount;
                t[j] += amount;
                out.push((JugMove::Pour(i, j), t));
            }
        }
    }
    out
}

fn rebuild_plan(
    parent: &HashMap<JugState, (JugState, JugMove)>,
    start: &JugState,
    mut state: JugState,
) -> Vec<JugMove> {
    let mut moves = Vec::new();
    while &state != start {
        let (prev, mv) = parent[&state].clone();
        moves.push(mv);
        state = prev;
    }
    moves.reverse();
    moves
}

/// Searches for a move sequence reaching `target` from all-empty jugs.
/// `Ok(None)` means the reachable state space was exhausted without success.
pub(crate) fn jug_plan(
    caps: &[i64],
    target: i64,
    strategy: JugStrategy,
    cp: &Checkpoint,
) -> Result<Option<Vec<JugMove>>, Interrupt> {
    let start: JugState = vec![0; caps.len()];
    if satisfies(target, &start) {
        return Ok(Some(Vec::new()));
    }
    match strategy {
        JugStrategy::BreadthFirst => jug_bf(caps, target, start, cp),
        JugStrategy::DepthFirst => jug_df(caps, target, start, cp),
        JugStrategy::HillClimbing => jug_hc(caps, target, start, cp),
    }
}

fn jug_bf(
    caps: &[i64],
    target: i64,
    start: JugState,
    cp: &Checkpoint,
) -> Result<Option<Vec<JugMove>>, Interrupt> {
    let mut queue = VecDeque::from([start.clone()]);
    let mut visited = HashSet::from([start.clone()]);
    let mut parent = HashMap::new();
    while let Some(s) = queue.pop_front() {
        for (mv, t) in successors(caps, &s) {
            cp.tick()?;
            if !visited.insert(t.clone()) {
                continue;
            }
            parent.insert(t.clone(), (s.clone(), mv));
            if satisfies(target, &t) {
                return Ok(Some(rebuild_plan(&parent, &start, t)));
            }
            queue.push_back(t);
        }
    }
    Ok(None)
}

fn jug_df(
    caps: &[i64],
    target: i64,
    start: JugState,
    cp: &Checkpoint,
) -> Result<Option<Vec<JugMove>>, Interrupt> {
    let mut stack = vec![start.clone()];
    let mut visited = HashSet::from([start.clone()]);
    let mut parent = HashMap::new();
    while let Some(s) = stack.pop() {
        if satisfies(target, &s) {
            return Ok(Some(rebuild_plan(&parent, &start, s)));
        }
        // Reverse push so the first-generated move is explored first.
        for (mv, t) in successors(caps, &s).into_iter().rev() {
            cp.tick()?;
            if visited.insert(t.clone()) {
                parent.insert(t.clone(), (s.clone(), mv));
                stack.push(t);
            }
        }
    }
    Ok(None)
}

fn jug_hc(
    caps: &[i64],
    target: i64,
    start: JugState,
    cp: &Checkpoint,
) -> Result<Option<Vec<JugMove>>, Interrupt> {
    // Remaining distance to the target amount, under either goal reading.
    let score = |s: &[i64]| -> i64 {
        let per_jug = s
            .iter()
            .map(|&c| (c - target).abs())
            .min()
            .unwrap_or(i64::MAX);
        let combined = (s.iter().sum::<i64>() - target).abs();
        per_jug.min(combined)
    };
    let mut seq: u64 = 0;
    let mut heap = BinaryHeap::from([Reverse((score(&start), seq, start.clone()))]);
    let mut visited = HashSet::from([start.clone()]);
    let mut parent = HashMap::new();
    while let Some(Reverse((_, _, s))) = heap.pop() {
        if satisfies(target, &s) {
            return Ok(Some(rebuild_plan(&parent, &start, s)));
        }
        for (mv, t) in successors(caps, &s) {
            cp.tick()?;
            if visited.insert(t.clone()) {
                parent.insert(t.clone(), (s.clone(), mv));
                seq += 1;
                heap.push(Reverse((score(&t), seq, t)));
            }
        }
    }
    Ok(None)
}

/// Renders a plan as a list term of `fill(I)`, `empty(I)`, `pour(I, J)`
/// compounds with 0-based integer jug indices.
pub fn plan_to_term(plan: &[JugMove]) -> Term {
    let steps = plan
        .iter()
        .map(|mv| match *mv {
            JugMove::Fill(i) => Term::compound("fill", vec![Term::int(i as i64)]),
            JugMove::Empty(i) => Term::compound("empty", vec![Term::int(i as i64)]),
            JugMove::Pour(i, j) => {
                Term::compound("pour", vec![Term::int(i as i64), Term::int(j as i64)])
            }
        })
        .collect();
    Term::list(steps)
}

/// Inverse of [`plan_to_term`].
pub fn plan_from_term(t: &Term) -> Result<Vec<JugMove>, String> {
    let Term::List(steps) = t else {
        return Err(format!("plan is not a list: {t}"));
    };
    let index = |arg: &Term| -> Result<usize, String> {
        match arg {
            Term::Int(n) if *n >= 0 => Ok(*n as usize),
            other => Err(format!("bad jug index: {other}")),
        }
    };
    steps
        .iter()
        .map(|step| match step {
            Term::Compound(f, args) if f.as_str() == "fill" && args.len() == 1 => {
                Ok(JugMove::Fill(index(&args[0])?))
            }
            Term::Compound(f, args) if f.as_str() == "empty" && args.len() == 1 => {
                Ok(JugMove::Empty(index(&args[0])?))
            }
            Term::Compound(f, args) if f.as_str() == "pour" && args.len() == 2 => {
                Ok(JugMove::Pour(index(&args[0])?, index(&args[1])?))
            }
            other => Err(format!("bad plan step: {other}")),
        })
        .collect()
}

/// Replays `plan` move by move on a fresh simulator and checks that every
/// move is legal (no out-of-range index, no no-op fill/empty/pour) and that
/// the final state reaches `target`. This is the validity oracle for plans
/// produced by any of the searches; it shares no code with them.
pub fn replay_plan(caps: &[i64], target: i64, plan: &[JugMove]) -> Result<(), String> {
    let k = caps.len();
    let mut s: JugState = vec![0; k];
    for (step, mv) in plan.iter().enumerate() {
        let fail = |msg: String| Err(format!("step {step}: {msg}"));
        match *mv {
            JugMove::Fill(i) => {
                if i >= k {
                    return fail(format!("fill of jug {i} out of range"));
                }
                if s[i] == caps[i] {
                    return fail(format!("fill of already-full jug {i}"));
                }
                s[i] = caps[i];
            }
            JugMove::Empty(i) => {
                if i >= k {
                    return fail(format!("empty of jug {i} out of range"));
                }
                if s[i] == 0 {
                    return fail(format!("empty of already-empty jug {i}"));
                }
                s[i] = 0;
            }
            JugMove::Pour(i, j) => {
                if i >= k || j >= k || i == j {
                    return fail(format!("pour {i} -> {j} out of range"));
                }
                if s[i] == 0 {
                    return fail(format!("pour from empty jug {i}"));
                }
                if s[j] == caps[j] {
                    return fail(format!("pour into full jug {j}"));
                }
                let amount = s[i].min(caps[j] - s[j]);
                s[i] -= amount;
                s[j] += amount;
            }
        }
    }
    if satisfies(target, &s) {
        Ok(())
    } else {
        Err(format!("plan ends at {s:?}, target {target} not reached"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goal::CancelToken;

    fn cp() -> Checkpoint {
        Checkpoint::new(CancelToken::new())
    }

    #[test]
    fn hanoi_count_matches_closed_form() {
        for n in 0..=12 {
            assert_eq!(hanoi_count(n, &cp()).unwrap(), (1u64 << n) - 1);
        }
    }

    #[test]
    fn fib_matches_iterative_oracle() {
        let mut a: u64 = 0;
        let mut b: u64 = 1;
        for n in 0..=20 {
            assert_eq!(fib_naive(n, &cp()).unwrap(), a);
            (a, b) = (b, a + b);
        }
    }

    #[test]
    fn all_strategies_solve_the_five_nine_puzzle() {
        for strategy in [
            JugStrategy::BreadthFirst,
            JugStrategy::DepthFirst,
            JugStrategy::HillClimbing,
        ] {
            for target in [1, 2, 3, 4, 6, 7, 8, 9, 11, 12, 13, 14] {
                let plan = jug_plan(&[5, 9], target, strategy, &cp())
                    .unwrap()
                    .unwrap_or_else(|| panic!("{strategy:?} found no plan for {target}"));
                replay_plan(&[5, 9], target, &plan)
                    .unwrap_or_else(|e| panic!("{strategy:?} target {target}: {e}"));
            }
        }
    }

    #[test]
    fn breadth_first_plans_are_never_longer() {
        for target in [1, 2, 4, 9] {
            let by = |s| jug_plan(&[5, 9], target, s, &cp()).unwrap().unwrap().len();
            let bf = by(JugStrategy::BreadthFirst);
            assert!(bf <= by(JugStrategy::DepthFirst));
            assert!(bf <= by(JugStrategy::HillClimbing));
        }
    }

    #[test]
    fn unreachable_target_exhausts_to_none() {
        // gcd(4, 6) = 2, so odd amounts are unreachable.
        for strategy in [
            JugStrategy::BreadthFirst,
            JugStrategy::DepthFirst,
            JugStrategy::HillClimbing,
        ] {
            assert_eq!(jug_plan(&[4, 6], 5, strategy, &cp()).unwrap(), None);
        }
    }

    #[test]
    fn zero_target_needs_no_moves() {
        let plan = jug_plan(&[5, 9], 0, JugStrategy::BreadthFirst, &cp()).unwrap();
        assert_eq!(plan, Some(vec![]));
    }

    #[test]
    fn plan_terms_round_trip() {
        let plan = vec![JugMove::Fill(1), JugMove::Pour(1, 0), JugMove::Empty(0)];
        let t = plan_to_term(&plan);
        assert_eq!(t.to_string(), "[fill(1),pour(1, 0),empty(0)]");
        assert_eq!(plan_from_term(&t).unwrap(), plan);
        assert!(plan_from_term(&Term::atom("nope")).is_err());
    }

    #[test]
    fn replay_rejects_illegal_moves() {
        let caps = [5, 9];
        assert!(replay_plan(&caps, 5, &[JugMove::Fill(0)]).is_ok());
        assert!(replay_plan(&caps, 5, &[JugMove::Fill(0), JugMove::Fill(0)]).is_err());
        assert!(replay_plan(&caps, 0, &[JugMove::Empty(0)]).is_err());
        assert!(replay_plan(&caps, 9, &[JugMove::Fill(7)]).is_err());
        assert!(replay_plan(&caps, 4, &[JugMove::Fill(0)]).is_err());
    }

    #[test]
    fn cancelled_searches_back_out() {
        let token = CancelToken::new();
        token.cancel();
        assert!(hanoi_count(22, &Checkpoint::new(token.clone())).is_err());
        // An impossible target forces each search to visit every reachable
        // state, so it cannot slip under the checkpoint interval.
        for strategy in [
            JugStrategy::BreadthFirst,
            JugStrategy::DepthFirst,
            JugStrategy::HillClimbing,
        ] {
            let cp = Checkpoint::new(token.clone());
            assert!(jug_plan(&[97, 101], 9999, strategy, &cp).is_err());
        }
    }
}
