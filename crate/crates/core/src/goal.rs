//! Resumable enumeration of nondeterministic goals.
//!
//! A [`Goal`] is an immutable description of a search; [`Goal::solutions`]
//! turns it into a lazy iterator of [`Bindings`], one per solution, in the
//! goal's canonical backtracking order. Enumeration honors a [`CancelToken`]:
//! the token is checked before every yielded solution and at least once per
//! [`CHECKPOINT_INTERVAL`] internal steps, so even non-terminating goals stop
//! within a bounded amount of extra work after cancellation.

use std::cell::Cell;
use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::rc::Rc;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use crate::puzzles::{self, JugStrategy};
use crate::term::{term_variables, Bindings, Term};

/// Upper bound on internal steps between two cancellation checks.
pub const CHECKPOINT_INTERVAL: u64 = 1024;

/// Shared cancellation flag. Cloning hands out another handle to the same
/// flag; setting it is idempotent and safe from any thread.
#[derive(Clone, Debug, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> CancelToken {
        CancelToken::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::Release);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Acquire)
    }
}

/// A goal's step function raised an error. Distinct from exhaustion: an
/// enumeration that ends with this has not produced its full solution set.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("engine failure: {0}")]
pub struct EngineFailure(pub String);

/// Why an enumeration stopped early.
#[derive(Clone, Debug)]
pub(crate) enum Interrupt {
    Cancelled,
    Failed(EngineFailure),
}

/// Tick counter shared by all iterators of one enumeration. Every unit of
/// internal work calls [`Checkpoint::tick`]; each `CHECKPOINT_INTERVAL`-th
/// tick reads the cancel token.
pub(crate) struct Checkpoint {
    cancel: CancelToken,
    ticks: Cell<u64>,
}

impl Checkpoint {
    pub(crate) fn new(cancel: CancelToken) -> Checkpoint {
        Checkpoint {
            cancel,
            ticks: Cell::new(0),
        }
    }

    pub(crate) fn tick(&self) -> Result<(), Interrupt> {
        let n = self.ticks.get().wrapping_add(1);
        self.ticks.set(n);
        if n.is_multiple_of(CHECKPOINT_INTERVAL) && self.cancel.is_cancelled() {
            return Err(Interrupt::Cancelled);
        }
        Ok(())
    }

    pub(crate) fn is_cancelled(&self) -> bool {
        self.cancel.is_cancelled()
    }
}

type Stream = Box<dyn Iterator<Item = Result<Bindings, Interrupt>>>;
type SolutionFn = Box<dyn Fn(&Bindings) -> Vec<Bindings> + Send + Sync>;

enum GoalNode {
    True,
    Fail,
    SucceedWith {
        slot: usize,
        term: Term,
    },
    Member {
        slot: usize,
        items: Term,
    },
    Between {
        slot: usize,
        lo: i64,
        hi: Option<i64>,
    },
    FromFn {
        arity: usize,
        f: SolutionFn,
    },
    Conj(Goal, Goal),
    Disj(Goal, Goal),
    HanoiMoves {
        rings: u32,
    },
    FibNaive {
        n: u32,
    },
    JugSearch {
        capacities: Vec<i64>,
        target: i64,
        strategy: JugStrategy,
    },
}

/// An immutable, shareable goal description. Cheap to clone.
#[derive(Clone)]
pub struct Goal {
    arity: usize,
    node: Arc<GoalNode>,
}

fn mk(arity: usize, node: GoalNode) -> Goal {
    Goal {
        arity,
        node: Arc::new(node),
    }
}

fn arity_with_vars(slot: usize, t: &Term) -> usize {
    let from_term = term_variables(t).into_iter().max().map_or(0, |i| i + 1);
    (slot + 1).max(from_term)
}

impl Goal {
    /// Succeeds exactly once, binding nothing.
    pub fn succeed() -> Goal {
        mk(0, GoalNode::True)
    }

    /// Never succeeds.
    pub fn fail_goal() -> Goal {
        mk(0, GoalNode::Fail)
    }

    /// Binds `slot` to the (resolved) value of `term`; succeeds at most once.
    pub fn succeed_with(slot: usize, term: Term) -> Goal {
        mk(
            arity_with_vars(slot, &term),
            GoalNode::SucceedWith { slot, term },
        )
    }

    /// Enumerates the elements of `items` (which must resolve to a list),
    /// matching each against `slot` in list order.
    pub fn member(slot: usize, items: Term) -> Goal {
        mk(
            arity_with_vars(slot, &items),
            GoalNode::Member { slot, items },
        )
    }

    /// Enumerates the integers `lo..=hi` into `slot`; `hi = None` never stops.
    /// If `slot` comes in bound to an integer, succeeds once iff it is in range.
    pub fn between(slot: usize, lo: i64, hi: Option<i64>) -> Goal {
        mk(slot + 1, GoalNode::Between { slot, lo, hi })
    }

    /// Wraps a pure function from input bindings to a list of output bindings.
    /// Each output must extend its input (same length, no rebinding); outputs
    /// that do not, and panics inside `f`, surface as engine failures.
    pub fn from_function(
        arity: usize,
        f: impl Fn(&Bindings) -> Vec<Bindings> + Send + Sync + 'static,
    ) -> Goal {
        mk(
            arity,
            GoalNode::FromFn {
                arity,
                f: Box::new(f),
            },
        )
    }

    /// For each solution of `g1`, enumerates all solutions of `g2` under it.
    pub fn conj(g1: Goal, g2: Goal) -> Goal {
        let arity = g1.arity.max(g2.arity);
        mk(arity, GoalNode::Conj(g1, g2))
    }

    /// All solutions of `g1`, then all solutions of `g2`.
    pub fn disj(g1: Goal, g2: Goal) -> Goal {
        let arity = g1.arity.max(g2.arity);
        mk(arity, GoalNode::Disj(g1, g2))
    }

    /// Right-folds `goals` into a conjunction; empty input succeeds once.
    pub fn conj_all(goals: impl IntoIterator<Item = Goal>) -> Goal {
        let mut goals: Vec<Goal> = goals.into_iter().collect();
        match goals.pop() {
            None => Goal::succeed(),
            Some(last) => goals
                .into_iter()
                .rev()
                .fold(last, |acc, g| Goal::conj(g, acc)),
        }
    }

    /// Counts the moves of an `rings`-disc Towers of Hanoi solution by
    /// actually recursing over them; binds slot 0 to the count.
    pub fn hanoi_moves(rings: u32) -> Goal {
        mk(1, GoalNode::HanoiMoves { rings })
    }

    /// Doubly-recursive Fibonacci; binds slot 0 to `fib(n)`.
    pub fn fib_naive(n: u32) -> Goal {
        mk(1, GoalNode::FibNaive { n })
    }

    /// Water-jug planning, breadth-first; binds slot 0 to a move list.
    pub fn jug_search_bf(capacities: Vec<i64>, target: i64) -> Goal {
        Goal::jug_search(capacities, target, JugStrategy::BreadthFirst)
    }

    /// Water-jug planning, depth-first with visited-set pruning.
    pub fn jug_search_df(capacities: Vec<i64>, target: i64) -> Goal {
        Goal::jug_search(capacities, target, JugStrategy::DepthFirst)
    }

    /// Water-jug planning, hill climbing on remaining distance to the target.
    pub fn jug_search_hc(capacities: Vec<i64>, target: i64) -> Goal {
        Goal::jug_search(capacities, target, JugStrategy::HillClimbing)
    }

    pub fn jug_search(capacities: Vec<i64>, target: i64, strategy: JugStrategy) -> Goal {
        mk(
            1,
            GoalNode::JugSearch {
                capacities,
                target,
                strategy,
            },
        )
    }

    /// Smallest bindings length this goal can run under.
    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Structural hint: true only if this goal can be shown, without running
    /// it, to yield at most one solution from any input. Conservative.
    pub fn max_one_solution(&self) -> bool {
        match &*self.node {
            GoalNode::True
            | GoalNode::Fail
            | GoalNode::SucceedWith { .. }
            | GoalNode::HanoiMoves { .. }
            | GoalNode::FibNaive { .. }
            | GoalNode::JugSearch { .. } => true,
            GoalNode::Between { lo, hi, .. } => *hi == Some(*lo),
            GoalNode::Member { .. } | GoalNode::FromFn { .. } => false,
            GoalNode::Conj(a, b) => a.max_one_solution() && b.max_one_solution(),
            GoalNode::Disj(_, _) => false,
        }
    }

    /// Lazily enumerates solutions from `input`, in canonical backtracking
    /// order. The iterator ends early, without an error item, once `cancel`
    /// is observed set; a failing step function ends it with one `Err`.
    ///
    /// Panics if `input` is shorter than [`Goal::arity`].
    pub fn solutions(&self, input: Bindings, cancel: CancelToken) -> Solutions {
        assert!(
            input.len() >= self.arity,
            "goal needs {} slots, got {}",
            self.arity,
            input.len()
        );
        let cp = Rc::new(Checkpoint::new(cancel));
        Solutions {
            inner: stream(self, input, &cp),
            cp,
            done: false,
        }
    }
}

impl fmt::Debug for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.node {
            GoalNode::True => write!(f, "true"),
            GoalNode::Fail => write!(f, "fail"),
            GoalNode::SucceedWith { slot, term } => write!(f, "_G{slot} = {term}"),
            GoalNode::Member { slot, items } => write!(f, "member(_G{slot}, {items})"),
            GoalNode::Between { slot, lo, hi } => match hi {
                Some(hi) => write!(f, "between(_G{slot}, {lo}, {hi})"),
                None => write!(f, "between(_G{slot}, {lo}, inf)"),
            },
            GoalNode::FromFn { arity, .. } => write!(f, "from_function/{arity}"),
            GoalNode::Conj(a, b) => write!(f, "({a:?}, {b:?})"),
            GoalNode::Disj(a, b) => write!(f, "({a:?} ; {b:?})"),
            GoalNode::HanoiMoves { rings } => write!(f, "hanoi_moves({rings})"),
            GoalNode::FibNaive { n } => write!(f, "fib_naive({n})"),
            GoalNode::JugSearch {
                capacities,
                target,
                strategy,
            } => write!(f, "jug_search_{strategy:?}({capacities:?}, {target})"),
        }
    }
}

/// Lazy solution sequence of one [`Goal::solutions`] call. Fused: after the
/// first `None` or `Err` item it stays exhausted.
pub struct Solutions {
    inner: Stream,
    cp: Rc<Checkpoint>,
    done: bool,
}

impl Iterator for Solutions {
    type Item = Result<Bindings, EngineFailure>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if self.cp.is_cancelled() {
            self.done = true;
            return None;
        }
        match self.inner.next() {
            Some(Ok(b)) => Some(Ok(b)),
            Some(Err(Interrupt::Cancelled)) | None => {
                self.done = true;
                None
            }
            Some(Err(Interrupt::Failed(e))) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

fn stream(goal: &Goal, input: Bindings, cp: &Rc<Checkpoint>) -> Stream {
    match &*goal.node {
        GoalNode::True => semidet(move || Ok(Some(input))),
        GoalNode::Fail => Box::new(std::iter::empty()),
        GoalNode::SucceedWith { slot, term } => {
            let (slot, term, cp) = (*slot, term.clone(), Rc::clone(cp));
            semidet(move || {
                cp.tick()?;
                let mut out = input;
                Ok(out.unify_slot(slot, &term).then_some(out))
            })
        }
        GoalNode::Member { slot, items } => member_stream(*slot, items, input, cp),
        GoalNode::Between { slot, lo, hi } => between_stream(*slot, *lo, *hi, input, cp),
        GoalNode::FromFn { .. } => {
            // The closure lives inside the goal's Arc; clone the goal to keep
            // it alive for the stream's lifetime.
            let goal = goal.clone();
            let cp = Rc::clone(cp);
            let mut produced: Option<std::vec::IntoIter<Bindings>> = None;
            let mut failed = false;
            Box::new(std::iter::from_fn(move || {
                if failed {
                    return None;
                }
                if produced.is_none() {
                    let GoalNode::FromFn { f, .. } = &*goal.node else {
                        unreachable!()
                    };
                    match panic::catch_unwind(AssertUnwindSafe(|| f(&input))) {
                        Ok(outs) => produced = Some(outs.into_iter()),
                        Err(payload) => {
                            failed = true;
                            return Some(Err(Interrupt::Failed(EngineFailure(format!(
                                "goal function panicked: {}",
                                panic_message(payload.as_ref())
                            )))));
                        }
                    }
                }
                let out = produced.as_mut().unwrap().next()?;
                if let Err(stop) = cp.tick() {
                    failed = true;
                    return Some(Err(stop));
                }
                if out.len() != input.len() || !out.extends(&input) {
                    failed = true;
                    return Some(Err(Interrupt::Failed(EngineFailure(
                        "goal function output does not extend its input".into(),
                    ))));
                }
                Some(Ok(out))
            }))
        }
        GoalNode::Conj(a, b) => Box::new(ConjStream {
            outer: stream(a, input, cp),
            inner: None,
            right: b.clone(),
            cp: Rc::clone(cp),
            dead: false,
        }),
        GoalNode::Disj(a, b) => Box::new(DisjStream {
            current: stream(a, input.clone(), cp),
            pending: Some((b.clone(), input)),
            cp: Rc::clone(cp),
            dead: false,
        }),
        GoalNode::HanoiMoves { rings } => {
            let (rings, cp) = (*rings, Rc::clone(cp));
            semidet(move || {
                let count = puzzles::hanoi_count(rings, &cp)?;
                bind_int(input, count as i64)
            })
        }
        GoalNode::FibNaive { n } => {
            let (n, cp) = (*n, Rc::clone(cp));
            semidet(move || {
                let value = puzzles::fib_naive(n, &cp)?;
                bind_int(input, value as i64)
            })
        }
        GoalNode::JugSearch {
            capacities,
            target,
            strategy,
        } => {
            let (caps, target, strategy, cp) =
                (capacities.clone(), *target, *strategy, Rc::clone(cp));
            semidet(
                move || match puzzles::jug_plan(&caps, target, strategy, &cp)? {
                    None => Ok(None),
                    Some(plan) => {
                        let mut out = input;
                        let t = puzzles::plan_to_term(&plan);
                        Ok(out.unify_slot(0, &t).then_some(out))
                    }
                },
            )
        }
    }
}

fn bind_int(mut b: Bindings, value: i64) -> Result<Option<Bindings>, Interrupt> {
    Ok(b.unify_slot(0, &Term::Int(value)).then_some(b))
}

/// Stream for a goal with at most one solution, produced by one closure call.
fn semidet(f: impl FnOnce() -> Result<Option<Bindings>, Interrupt> + 'static) -> Stream {
    let mut f = Some(f);
    Box::new(std::iter::from_fn(move || match f.take()?() {
        Ok(Some(b)) => Some(Ok(b)),
        Ok(None) => None,
        Err(stop) => Some(Err(stop)),
    }))
}

fn member_stream(slot: usize, items: &Term, input: Bindings, cp: &Rc<Checkpoint>) -> Stream {
    let resolved = input.resolve(items);
    let elements: Arc<[Term]> = match resolved {
        Term::List(elements) => elements,
        other => {
            let msg = format!("member: not a list: {other}");
            return semidet(move || Err(Interrupt::Failed(EngineFailure(msg))));
        }
    };
    let cp = Rc::clone(cp);
    let mut index = 0;
    Box::new(std::iter::from_fn(move || {
        while index < elements.len() {
            if let Err(stop) = cp.tick() {
                index = elements.len();
                return Some(Err(stop));
            }
            let element = &elements[index];
            index += 1;
            let mut out = input.clone();
            if out.unify_slot(slot, element) {
                return Some(Ok(out));
            }
        }
        None
    }))
}

fn between_stream(
    slot: usize,
    lo: i64,
    hi: Option<i64>,
    input: Bindings,
    cp: &Rc<Checkpoint>,
) -> Stream {
    let in_range = move |n: i64| n >= lo && hi.is_none_or(|hi| n <= hi);
    if input.is_bound(slot) {
        let ok = matches!(input.resolve(&Term::Var(slot)), Term::Int(n) if in_range(n));
        return semidet(move || Ok(ok.then_some(input)));
    }
    let cp = Rc::clone(cp);
    let mut next = Some(lo);
    Box::new(std::iter::from_fn(move || {
        let n = next.filter(|&n| in_range(n))?;
        next = n.checked_add(1);
        if let Err(stop) = cp.tick() {
            next = None;
            return Some(Err(stop));
        }
        let mut out = input.clone();
        assert!(out.unify_slot(slot, &Term::Int(n)));
        Some(Ok(out))
    }))
}

struct ConjStream {
    outer: Stream,
    inner: Option<Stream>,
    right: Goal,
    cp: Rc<Checkpoint>,
    dead: bool,
}

impl Iterator for ConjStream {
    type Item = Result<Bindings, Interrupt>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.dead {
            return None;
        }
        loop {
            if let Some(inner) = &mut self.inner {
                match inner.next() {
                    Some(Ok(b)) => return Some(Ok(b)),
                    Some(Err(stop)) => {
                        self.dead = true;
                        return Some(Err(stop));
                    }
                    None => self.inner = None,
                }
            }
            match self.outer.next() {
                Some(Ok(mid)) => self.inner = Some(stream(&self.right, mid, &self.cp)),
                Some(Err(stop)) => {
                    self.dead = true;
                    return Some(Err(stop));
                }
                None => return None,
            }
        }
    }
}

struct DisjStream {
    current: Stream,
    pending: Option<(Goal, Bindings)>,
    cp: Rc<Checkpoint>,
    dead: bool,
}

impl Iterator for DisjStream {
    type Item = Result<Bindings, Interrupt>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.dead {
            return None;
        }
        loop {
            match self.current.next() {
                Some(Ok(b)) => return Some(Ok(b)),
                Some(Err(stop)) => {
                    self.dead = true;
                    return Some(Err(stop));
                }
                None => match self.pending.take() {
                    Some((g, input)) => self.current = stream(&g, input, &self.cp),
                    None => return None,
                },
            }
        }
    }
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> &str {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s
    } else {
        "non-string panic payload"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::instantiate;

    fn ints(items: &[i64]) -> Term {
        Term::list(items.iter().copied().map(Term::int).collect())
    }

    /// Runs `g` from `arity` fresh slots and projects `Var(watch)` per solution.
    fn collect(g: &Goal, arity: usize, watch: usize) -> Vec<Term> {
        g.solutions(Bindings::new(arity), CancelToken::new())
            .map(|r| instantiate(&Term::var(watch), &r.expect("engine failure")))
            .collect()
    }

    #[test]
    fn member_enumerates_in_list_order() {
        let g = Goal::member(0, ints(&[1, 2, 3]));
        assert_eq!(
            collect(&g, 1, 0),
            vec![Term::int(1), Term::int(2), Term::int(3)]
        );
    }

    #[test]
    fn shared_variable_conjunction_intersects() {
        let g = Goal::conj(
            Goal::member(0, ints(&[1, 2])),
            Goal::member(0, ints(&[2, 3])),
        );
        assert_eq!(collect(&g, 1, 0), vec![Term::int(2)]);
    }

    #[test]
    fn conj_enumerates_in_nested_order() {
        let g = Goal::conj(
            Goal::member(0, ints(&[1, 2])),
            Goal::member(1, Term::list(vec![Term::atom("a")])),
        );
        let pairs: Vec<(Term, Term)> = g
            .solutions(Bindings::new(2), CancelToken::new())
            .map(|r| {
                let b = r.unwrap();
                (b.resolve(&Term::var(0)), b.resolve(&Term::var(1)))
            })
            .collect();
        assert_eq!(
            pairs,
            vec![
                (Term::int(1), Term::atom("a")),
                (Term::int(2), Term::atom("a")),
            ]
        );
    }

    #[test]
    fn conj_with_failing_left_is_empty() {
        let g = Goal::conj(Goal::fail_goal(), Goal::member(0, ints(&[1])));
        assert_eq!(collect(&g, 1, 0), vec![]);
    }

    #[test]
    fn disj_concatenates_in_order() {
        let g = Goal::disj(Goal::member(0, ints(&[1])), Goal::member(0, ints(&[2])));
        assert_eq!(collect(&g, 1, 0), vec![Term::int(1), Term::int(2)]);
        let g = Goal::disj(Goal::fail_goal(), Goal::member(0, ints(&[9])));
        assert_eq!(collect(&g, 1, 0), vec![Term::int(9)]);
    }

    #[test]
    fn conj_disj_match_nested_loop_and_concat_oracles() {
        let xs = [1, 2, 3];
        let ys = [2, 3, 4];
        let g = Goal::conj(Goal::member(0, ints(&xs)), Goal::member(1, ints(&ys)));
        let got: Vec<(Term, Term)> = g
            .solutions(Bindings::new(2), CancelToken::new())
            .map(|r| {
                let b = r.unwrap();
                (b.resolve(&Term::var(0)), b.resolve(&Term::var(1)))
            })
            .collect();
        let mut want = Vec::new();
        for x in xs {
            for y in ys {
                want.push((Term::int(x), Term::int(y)));
            }
        }
        assert_eq!(got, want);

        let g = Goal::disj(Goal::member(0, ints(&xs)), Goal::member(0, ints(&ys)));
        let concat: Vec<Term> = xs.iter().chain(ys.iter()).map(|&n| Term::int(n)).collect();
        assert_eq!(collect(&g, 1, 0), concat);
    }

    #[test]
    fn between_enumerates_and_checks_bound_values() {
        let g = Goal::between(0, 3, Some(5));
        assert_eq!(
            collect(&g, 1, 0),
            vec![Term::int(3), Term::int(4), Term::int(5)]
        );

        let mut b = Bindings::new(1);
        assert!(b.unify_slot(0, &Term::int(4)));
        assert_eq!(g.solutions(b, CancelToken::new()).count(), 1);

        let mut b = Bindings::new(1);
        assert!(b.unify_slot(0, &Term::int(9)));
        assert_eq!(g.solutions(b, CancelToken::new()).count(), 0);
    }

    #[test]
    fn unbounded_between_stops_soon_after_cancel() {
        let cancel = CancelToken::new();
        let mut solutions = Goal::between(0, 1, None).solutions(Bindings::new(1), cancel.clone());
        for _ in 0..5 {
            assert!(solutions.next().unwrap().is_ok());
        }
        cancel.cancel();
        let extra = solutions.count() as u64;
        assert!(
            extra <= CHECKPOINT_INTERVAL,
            "kept going for {extra} yields"
        );
    }

    #[test]
    fn enumeration_is_deterministic() {
        let g = Goal::conj(
            Goal::disj(Goal::member(0, ints(&[1, 2])), Goal::between(0, 1, Some(3))),
            Goal::member(1, ints(&[5, 6])),
        );
        let run = || {
            g.solutions(Bindings::new(2), CancelToken::new())
                .map(|r| r.unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn solutions_extend_their_input() {
        let mut input = Bindings::new(2);
        assert!(input.unify_slot(1, &Term::int(6)));
        let g = Goal::conj(
            Goal::member(0, ints(&[1, 2])),
            Goal::member(1, ints(&[5, 6])),
        );
        let outs: Vec<Bindings> = g
            .solutions(input.clone(), CancelToken::new())
            .map(|r| r.unwrap())
            .collect();
        assert_eq!(outs.len(), 2);
        for out in outs {
            assert!(out.extends(&input));
        }
    }

    #[test]
    fn member_on_non_list_is_an_engine_failure() {
        let g = Goal::member(0, Term::int(3));
        let mut solutions = g.solutions(Bindings::new(1), CancelToken::new());
        assert!(matches!(solutions.next(), Some(Err(EngineFailure(_)))));
        assert!(solutions.next().is_none());
    }

    #[test]
    fn panicking_function_goal_fails_once_then_fuses() {
        let g = Goal::from_function(1, |_| panic!("boom"));
        let mut solutions = g.solutions(Bindings::new(1), CancelToken::new());
        match solutions.next() {
            Some(Err(EngineFailure(msg))) => assert!(msg.contains("boom")),
            other => panic!("expected failure, got {other:?}"),
        }
        assert!(solutions.next().is_none());
    }

    #[test]
    fn function_goal_must_extend_its_input() {
        // Rebinding slot 0 to a different value is not an extension.
        let g = Goal::from_function(1, |_| {
            let mut b = Bindings::new(1);
            assert!(b.unify_slot(0, &Term::int(99)));
            vec![b]
        });
        let mut input = Bindings::new(1);
        assert!(input.unify_slot(0, &Term::int(1)));
        let mut solutions = g.solutions(input, CancelToken::new());
        assert!(matches!(solutions.next(), Some(Err(EngineFailure(_)))));
    }

    #[test]
    fn function_goal_maps_inputs_to_outputs() {
        let plus_ten = Goal::from_function(2, |b| {
            let Term::Int(n) = b.resolve(&Term::var(0)) else {
                return vec![];
            };
            let mut out = b.clone();
            if out.unify_slot(1, &Term::int(n + 10)) {
                vec![out]
            } else {
                vec![]
            }
        });
        let g = Goal::conj(Goal::member(0, ints(&[1, 2])), plus_ten);
        assert_eq!(collect(&g, 2, 1), vec![Term::int(11), Term::int(12)]);
    }

    #[test]
    fn error_in_left_conjunct_propagates_once() {
        let g = Goal::conj(Goal::member(0, Term::atom("oops")), Goal::succeed());
        let results: Vec<_> = g.solutions(Bindings::new(1), CancelToken::new()).collect();
        assert_eq!(results.len(), 1);
        assert!(results[0].is_err());
    }

    #[test]
    fn conj_all_folds_and_empty_succeeds_once() {
        let g = Goal::conj_all(vec![
            Goal::member(0, ints(&[1, 2, 3])),
            Goal::member(0, ints(&[2, 3])),
            Goal::member(0, ints(&[3])),
        ]);
        assert_eq!(collect(&g, 1, 0), vec![Term::int(3)]);
        assert_eq!(
            Goal::conj_all(vec![])
                .solutions(Bindings::new(0), CancelToken::new())
                .count(),
            1
        );
    }

    #[test]
    fn max_one_solution_hint_is_conservative() {
        assert!(Goal::succeed_with(0, Term::int(1)).max_one_solution());
        assert!(Goal::hanoi_moves(4).max_one_solution());
        assert!(Goal::conj(Goal::fib_naive(3), Goal::succeed()).max_one_solution());
        assert!(!Goal::member(0, ints(&[1])).max_one_solution());
        assert!(!Goal::between(0, 1, Some(4)).max_one_solution());
        assert!(Goal::between(0, 1, Some(1)).max_one_solution());
    }

    #[test]
    fn hanoi_and_fib_goals_bind_their_counts() {
        assert_eq!(collect(&Goal::hanoi_moves(3), 1, 0), vec![Term::int(7)]);
        assert_eq!(collect(&Goal::fib_naive(9), 1, 0), vec![Term::int(34)]);
        assert_eq!(collect(&Goal::fib_naive(0), 1, 0), vec![Term::int(0)]);
    }

    #[test]
    fn cancelled_token_checked_before_first_solution() {
        let cancel = CancelToken::new();
        cancel.cancel();
        let g = Goal::member(0, ints(&[1, 2, 3]));
        assert_eq!(g.solutions(Bindings::new(1), cancel).count(), 0);
    }

    #[test]
    #[should_panic(expected = "goal needs")]
    fn short_input_is_a_caller_bug() {
        let g = Goal::member(0, ints(&[1]));
        let _ = g.solutions(Bindings::new(0), CancelToken::new());
    }
}
