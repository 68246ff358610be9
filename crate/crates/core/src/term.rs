//! Immutable term values, the only payload that crosses thread boundaries.
//!
//! Variables are integer slot indices into a [`Bindings`] vector rather than
//! named logic variables; there is no general unification. A term is sent
//! between threads by [`Term::snapshot`], which must produce a value that is
//! structurally equal to the original and independent of anything the sender
//! does afterwards. With this immutable representation that is a cheap clone,
//! but the contract is what matters and is tested as such.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, LazyLock, RwLock};

/// An interned atom name. Equality is a single integer compare; the backing
/// table is process-global and safe to use from any thread.
#[derive(Copy, Clone, PartialEq, Eq, Hash)]
pub struct Atom(u32);

struct Interner {
    names: Vec<&'static str>,
    by_name: HashMap<&'static str, u32>,
}

static INTERNER: LazyLock<RwLock<Interner>> = LazyLock::new(|| {
    RwLock::new(Interner {
        names: Vec::new(),
        by_name: HashMap::new(),
    })
});

impl Atom {
    pub fn new(name: &str) -> Atom {
        {
            let interner = INTERNER.read().unwrap();
            if let Some(&id) = interner.by_name.get(name) {
                return Atom(id);
            }
        }
        let mut interner = INTERNER.write().unwrap();
        if let Some(&id) = interner.by_name.get(name) {
            return Atom(id);
        }
        // Interned names live for the rest of the process.
        let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
        let id = interner.names.len() as u32;
        interner.names.push(leaked);
        interner.by_name.insert(leaked, id);
        Atom(id)
    }

    pub fn as_str(self) -> &'static str {
        INTERNER.read().unwrap().names[self.0 as usize]
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Atom({})", self.as_str())
    }
}

/// A finite, immutable value tree. Two terms are equal iff their trees are
/// identical node for node; a term is ground iff it contains no [`Term::Var`].
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Term {
    Atom(Atom),
    Int(i64),
    Var(usize),
    List(Arc<[Term]>),
    Compound(Atom, Arc<[Term]>),
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Atom(Atom::new(name))
    }

    pub fn int(value: i64) -> Term {
        Term::Int(value)
    }

    pub fn var(index: usize) -> Term {
        Term::Var(index)
    }

    pub fn list(elements: Vec<Term>) -> Term {
        Term::List(elements.into())
    }

    pub fn compound(functor: &str, args: Vec<Term>) -> Term {
        Term::Compound(Atom::new(functor), args.into())
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Atom(_) | Term::Int(_) => true,
            Term::Var(_) => false,
            Term::List(items) => items.iter().all(Term::is_ground),
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn contains_var(&self, index: usize) -> bool {
        match self {
            Term::Var(i) => *i == index,
            Term::Atom(_) | Term::Int(_) => false,
            Term::List(items) => items.iter().any(|t| t.contains_var(index)),
            Term::Compound(_, args) => args.iter().any(|t| t.contains_var(index)),
        }
    }

    /// Node count of the tree.
    pub fn size(&self) -> usize {
        match self {
            Term::Atom(_) | Term::Int(_) | Term::Var(_) => 1,
            Term::List(items) => 1 + items.iter().map(Term::size).sum::<usize>(),
            Term::Compound(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    /// Longest root-to-leaf path length.
    pub fn depth(&self) -> usize {
        match self {
            Term::Atom(_) | Term::Int(_) | Term::Var(_) => 1,
            Term::List(items) | Term::Compound(_, items) => {
                1 + items.iter().map(Term::depth).max().unwrap_or(0)
            }
        }
    }

    /// A copy that is structurally equal to `self` and independent of any
    /// state the producer mutates afterwards.
    pub fn snapshot(&self) -> Term {
        self.clone()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Atom(a) => write!(f, "{a}"),
            Term::Int(n) => write!(f, "{n}"),
            Term::Var(i) => write!(f, "_G{i}"),
            Term::List(items) => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
            Term::Compound(functor, args) => {
                write!(f, "{functor}(")?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{arg}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Distinct variable indices of `t` in first-occurrence, depth-first order.
pub fn term_variables(t: &Term) -> Vec<usize> {
    fn walk(t: &Term, seen: &mut Vec<usize>) {
        match t {
            Term::Var(i) => {
                if !seen.contains(i) {
                    seen.push(*i);
                }
            }
            Term::Atom(_) | Term::Int(_) => {}
            Term::List(items) | Term::Compound(_, items) => {
                for item in items.iter() {
                    walk(item, seen);
                }
            }
        }
    }
    let mut seen = Vec::new();
    walk(t, &mut seen);
    seen
}

/// One slot per variable index of a conjunction. A slot, once assigned within
/// a solution, is never reassigned to a different value; [`Bindings::unify_slot`]
/// enforces that and is the only way goals bind variables.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Bindings {
    slots: Vec<Option<Term>>,
}

impl Bindings {
    /// All slots unbound.
    pub fn new(len: usize) -> Bindings {
        Bindings {
            slots: vec![None; len],
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// The raw stored value of slot `i`, unresolved.
    pub fn get(&self, i: usize) -> Option<&Term> {
        self.slots[i].as_ref()
    }

    pub fn is_bound(&self, i: usize) -> bool {
        self.slots[i].is_some()
    }

    /// `t` with every bound variable replaced by its (recursively resolved)
    /// value. Unbound variables stay as `Var` nodes.
    pub fn resolve(&self, t: &Term) -> Term {
        match t {
            Term::Var(i) => match self.slots.get(*i).and_then(|s| s.as_ref()) {
                Some(bound) => self.resolve(bound),
                None => t.clone(),
            },
            Term::Atom(_) | Term::Int(_) => t.clone(),
            Term::List(items) => Term::List(items.iter().map(|x| self.resolve(x)).collect()),
            Term::Compound(functor, args) => {
                Term::Compound(*functor, args.iter().map(|x| self.resolve(x)).collect())
            }
        }
    }

    /// Match slot `i` against `t` under the current bindings. An unbound slot
    /// is assigned the resolved value of `t`; a bound slot succeeds only if
    /// the values are structurally equal. Rejects assignments that would make
    /// the slot's value contain the slot itself, which keeps every term finite.
    pub fn unify_slot(&mut self, i: usize, t: &Term) -> bool {
        let want = self.resolve(t);
        match &self.slots[i] {
            Some(_) => self.resolve(&Term::Var(i)) == want,
            None => {
                if want.contains_var(i) {
                    return false;
                }
                self.slots[i] = Some(want);
                true
            }
        }
    }

    /// True when every slot bound in `earlier` resolves to the same value here.
    pub fn extends(&self, earlier: &Bindings) -> bool {
        if self.len() < earlier.len() {
            return false;
        }
        (0..earlier.len()).all(|i| {
            !earlier.is_bound(i) || self.resolve(&Term::Var(i)) == earlier.resolve(&Term::Var(i))
        })
    }
}

/// A term template naming which variable bindings a thread reports per
/// solution; the pattern's `Var` nodes refer to goal slot indices.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AnswerProjection {
    pattern: Term,
}

impl AnswerProjection {
    pub fn new(pattern: Term) -> AnswerProjection {
        AnswerProjection { pattern }
    }

    pub fn pattern(&self) -> &Term {
        &self.pattern
    }

    /// Largest variable index mentioned by the pattern, if any.
    pub fn max_var(&self) -> Option<usize> {
        term_variables(&self.pattern).into_iter().max()
    }

    pub fn instantiate(&self, bindings: &Bindings) -> Term {
        instantiate(&self.pattern, bindings)
    }
}

/// `pattern` with each variable replaced by its bound value; unbound slots
/// remain `Var` nodes.
///
/// Panics if the pattern mentions a variable index outside `bindings`; that
/// is a construction bug, not a runtime condition, and is checked eagerly at
/// spawn time.
pub fn instantiate(pattern: &Term, bindings: &Bindings) -> Term {
    match pattern {
        Term::Var(i) => {
            assert!(
                *i < bindings.len(),
                "projection variable _G{i} out of range for {} slots",
                bindings.len()
            );
            bindings.resolve(pattern)
        }
        Term::Atom(_) | Term::Int(_) => pattern.clone(),
        Term::List(items) => Term::List(items.iter().map(|t| instantiate(t, bindings)).collect()),
        Term::Compound(functor, args) => Term::Compound(
            *functor,
            args.iter().map(|t| instantiate(t, bindings)).collect(),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bindings_of(values: Vec<Term>) -> Bindings {
        let mut b = Bindings::new(values.len());
        for (i, v) in values.into_iter().enumerate() {
            assert!(b.unify_slot(i, &v));
        }
        b
    }

    #[test]
    fn atoms_intern_to_the_same_id() {
        assert_eq!(Atom::new("solve"), Atom::new("solve"));
        assert_ne!(Atom::new("solve"), Atom::new("solved"));
        assert_eq!(Atom::new("solve").as_str(), "solve");
    }

    #[test]
    fn instantiate_single_slot_identity() {
        let b = bindings_of(vec![Term::int(2)]);
        assert_eq!(instantiate(&Term::var(0), &b), Term::int(2));
    }

    #[test]
    fn instantiate_substitutes_into_compound() {
        let b = bindings_of(vec![Term::int(1), Term::atom("a")]);
        let pattern = Term::compound("pair", vec![Term::var(0), Term::var(1)]);
        assert_eq!(
            instantiate(&pattern, &b),
            Term::compound("pair", vec![Term::int(1), Term::atom("a")])
        );
    }

    #[test]
    fn instantiate_matches_naive_substituter() {
        // Independent reference: plain recursive substitution without the
        // resolve indirection.
        fn subst(pattern: &Term, b: &Bindings) -> Term {
            match pattern {
                Term::Var(i) => b.get(*i).cloned().unwrap_or_else(|| pattern.clone()),
                Term::Atom(_) | Term::Int(_) => pattern.clone(),
                Term::List(items) => Term::List(items.iter().map(|t| subst(t, b)).collect()),
                Term::Compound(f, args) => {
                    Term::Compound(*f, args.iter().map(|t| subst(t, b)).collect())
                }
            }
        }
        let b = bindings_of(vec![Term::int(5), Term::int(6), Term::int(7), Term::int(8)]);
        let patterns = [
            Term::var(3),
            Term::compound("f", vec![Term::var(0), Term::list(vec![Term::var(2)])]),
            Term::list(vec![Term::var(1), Term::atom("x"), Term::var(3)]),
        ];
        for p in &patterns {
            assert_eq!(instantiate(p, &b), subst(p, &b));
        }
        assert_eq!(instantiate(&Term::var(3), &b), Term::int(8));
    }

    #[test]
    fn instantiate_leaves_unbound_slots_as_vars() {
        let mut b = Bindings::new(2);
        assert!(b.unify_slot(0, &Term::int(9)));
        let pattern = Term::compound("p", vec![Term::var(0), Term::var(1)]);
        assert_eq!(
            instantiate(&pattern, &b),
            Term::compound("p", vec![Term::int(9), Term::var(1)])
        );
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn instantiate_panics_on_out_of_range_index() {
        let b = Bindings::new(1);
        instantiate(&Term::var(3), &b);
    }

    #[test]
    fn snapshot_of_leaves_and_lists() {
        let a = Term::atom("x");
        assert_eq!(a.snapshot(), a);
        let l = Term::list(vec![Term::int(1), Term::int(2)]);
        assert_eq!(l.snapshot(), l);
    }

    #[test]
    fn snapshot_is_independent_of_later_builder_state() {
        // Build a deep term from a builder vec, snapshot it, then rebuild the
        // vec into a different term. The snapshot must be unchanged.
        let mut builder: Vec<Term> = (0..1000).map(Term::int).collect();
        let original = Term::list(builder.clone());
        let copy = original.snapshot();
        builder.clear();
        builder.push(Term::atom("overwritten"));
        let _other = Term::list(builder);
        assert_eq!(copy, original);
        assert_eq!(copy.size(), 1001);
    }

    #[test]
    fn term_variables_first_occurrence_dfs_order() {
        let t = Term::compound(
            "f",
            vec![
                Term::var(1),
                Term::compound("g", vec![Term::var(0), Term::var(1)]),
            ],
        );
        assert_eq!(term_variables(&t), vec![1, 0]);
        let g = Term::compound("g", vec![Term::var(0), Term::var(1)]);
        assert_eq!(term_variables(&g), vec![0, 1]);
        assert_eq!(term_variables(&Term::int(7)), Vec::<usize>::new());
    }

    #[test]
    fn unify_slot_is_single_assignment() {
        let mut b = Bindings::new(1);
        assert!(b.unify_slot(0, &Term::int(2)));
        assert!(b.unify_slot(0, &Term::int(2)));
        assert!(!b.unify_slot(0, &Term::int(3)));
        assert_eq!(b.get(0), Some(&Term::int(2)));
    }

    #[test]
    fn unify_slot_rejects_self_reference() {
        let mut b = Bindings::new(2);
        assert!(!b.unify_slot(0, &Term::compound("f", vec![Term::var(0)])));
        // Indirect cycle: 0 <- f(_G1), then 1 <- g(_G0) would loop on resolve.
        assert!(b.unify_slot(0, &Term::compound("f", vec![Term::var(1)])));
        assert!(!b.unify_slot(1, &Term::compound("g", vec![Term::var(0)])));
    }

    #[test]
    fn resolve_follows_chains_bound_later() {
        let mut b = Bindings::new(2);
        assert!(b.unify_slot(0, &Term::compound("f", vec![Term::var(1)])));
        assert!(b.unify_slot(1, &Term::int(3)));
        assert_eq!(
            b.resolve(&Term::var(0)),
            Term::compound("f", vec![Term::int(3)])
        );
    }

    #[test]
    fn display_is_prolog_like() {
        let t = Term::compound(
            "f",
            vec![
                Term::atom("a"),
                Term::list(vec![Term::int(1), Term::int(2)]),
                Term::var(0),
            ],
        );
        assert_eq!(t.to_string(), "f(a, [1,2], _G0)");
    }
}
