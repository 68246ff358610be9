//! Pipeline parallelism: a dependent conjunction run as a chain of stage
//! threads, each enumerating its goal over the partial solutions streamed
//! from the stage before it and forwarding the extended ones downstream.
//! The last stage feeds a result hub, so results arrive in exactly the
//! order a sequential enumeration of the conjunction would produce them.
//!
//! Stage-to-stage traffic uses ordinary mailbox envelopes carrying encoded
//! terms: `partial(S0, ..., Sn-1)` for a partial solution (slot `i` encoded
//! as `_Gi` when unbound) and the atom `done` as the end-of-stream marker,
//! which appears exactly once per link, last. A newly spawned stage learns
//! its successor from a wiring message (`$thread(I, G)` or `$hub(I, G)`)
//! before any solution traffic reaches it.

use crate::goal::{CancelToken, EngineFailure, Goal};
use crate::mailbox::Payload;
use crate::runtime::{Runtime, RuntimeError, ThreadCtx, ThreadId};
use crate::term::{AnswerProjection, Bindings, Term};
use crate::HubId;
use std::cell::Cell;
use std::sync::{Arc, Mutex};

/// Construction-time switches for [`pipe_create_with`].
#[derive(Clone, Debug, Default)]
pub struct PipeOptions {
    /// Conj-fold every leading goal that cannot yield more than one solution
    /// into the first remaining stage, so the pipe spends no thread on a
    /// stage that could never overlap with its neighbours. Off by default;
    /// it changes thread counts, never results.
    pub fold_deterministic_prefix: bool,
    /// Record every message on every link in a [`PipeTrace`].
    pub trace: bool,
}

/// One message observed on a stage link.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LinkEvent {
    /// A partial solution, in wire encoding.
    Partial(Term),
    /// The end-of-stream marker.
    End,
}

/// Per-link message log of an instrumented pipe. Link 0 is the priming link
/// (creator to first stage); link `i + 1` carries stage `i`'s output.
pub struct PipeTrace {
    links: Vec<Mutex<Vec<LinkEvent>>>,
}

impl PipeTrace {
    fn new(links: usize) -> PipeTrace {
        PipeTrace {
            links: (0..links).map(|_| Mutex::new(Vec::new())).collect(),
        }
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Snapshot of everything recorded on one link so far.
    pub fn events(&self, link: usize) -> Vec<LinkEvent> {
        self.links[link].lock().unwrap().clone()
    }

    /// How many partial solutions crossed one link.
    pub fn partials(&self, link: usize) -> usize {
        self.links[link]
            .lock()
            .unwrap()
            .iter()
            .filter(|e| matches!(e, LinkEvent::Partial(_)))
            .count()
    }

    fn record(&self, link: usize, event: LinkEvent) {
        self.links[link].lock().unwrap().push(event);
    }
}

/// A running pipeline: its result hub, its stage threads, and the drain
/// state. Stopping the handle stops every stage; merely dropping it leaves
/// the stages parked on their mailboxes.
///
/// The handle is the single consumer of the result hub. [`PipeHandle::next`]
/// blocks, so interleave it with [`PipeHandle::stop`] from one thread only.
pub struct PipeHandle {
    rt: Runtime,
    hub: HubId,
    stages: Vec<ThreadId>,
    nvars: usize,
    exhausted: Cell<bool>,
    /// Stage lifecycle notices not yet seen; a fallback exhaustion signal
    /// for a pipe whose end-of-stream marker was lost to a stage failure.
    pending_stages: Cell<usize>,
    trace: Option<Arc<PipeTrace>>,
}

impl PipeHandle {
    /// The result hub; also the pipeline's identity for hub-level operations.
    pub fn hub(&self) -> HubId {
        self.hub
    }

    /// Stage threads in conjunction order.
    pub fn stages(&self) -> &[ThreadId] {
        &self.stages
    }

    /// Slot count every partial solution carries.
    pub fn variable_count(&self) -> usize {
        self.nvars
    }

    /// The message log, when the pipe was created with tracing on.
    pub fn trace(&self) -> Option<&Arc<PipeTrace>> {
        self.trace.as_ref()
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted.get()
    }

    /// Blocks for the next result. Returns `None` once the pipe's output is
    /// exhausted, and keeps returning `None` from then on. Lifecycle notices
    /// from stage threads that finish early are consumed silently.
    pub fn next(&self) -> Option<Bindings> {
        if self.exhausted.get() {
            return None;
        }
        loop {
            let (sender, payload) = match self.rt.hub_receive_any(self.hub) {
                Ok(received) => received,
                Err(_) => {
                    // Hub gone: the pipe was stopped out from under us.
                    self.exhausted.set(true);
                    return None;
                }
            };
            match payload {
                Payload::Done => {
                    let left = self.pending_stages.get().saturating_sub(1);
                    self.pending_stages.set(left);
                    if left == 0 {
                        // Every stage ended without the marker arriving:
                        // a stage died mid-stream. Nothing more can come.
                        self.exhausted.set(true);
                        return None;
                    }
                }
                Payload::Answer(t) => match decode_message(&t, self.nvars) {
                    Some(StageMessage::Partial(b)) => return Some(b),
                    Some(StageMessage::End) => {
                        self.exhausted.set(true);
                        return None;
                    }
                    None => {
                        log::debug!(
                            "pipe {} ignoring foreign result {t} from {sender}",
                            self.hub
                        );
                    }
                },
            }
        }
    }

    /// Iterator over the remaining results.
    pub fn results(&self) -> impl Iterator<Item = Bindings> + '_ {
        std::iter::from_fn(move || self.next())
    }

    /// Stops every stage and frees the hub. Errors if already stopped.
    pub fn stop(&self) -> Result<(), RuntimeError> {
        self.exhausted.set(true);
        self.rt.stop_hub(self.hub)
    }
}

impl std::fmt::Debug for PipeHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PipeHandle")
            .field("hub", &self.hub)
            .field("stages", &self.stages)
            .field("nvars", &self.nvars)
            .field("exhausted", &self.exhausted.get())
            .finish()
    }
}

/// Builds and starts a pipeline over `goals`, one stage thread per goal,
/// with default options. `nvars` fixes the slot count carried end to end
/// and must cover every goal's arity.
///
/// On a thread-limit error the partially created stages are stopped before
/// the error is returned.
pub fn pipe_create(rt: &Runtime, goals: &[Goal], nvars: usize) -> Result<PipeHandle, RuntimeError> {
    pipe_create_with(rt, goals, nvars, PipeOptions::default())
}

/// As [`pipe_create`], with explicit options.
pub fn pipe_create_with(
    rt: &Runtime,
    goals: &[Goal],
    nvars: usize,
    options: PipeOptions,
) -> Result<PipeHandle, RuntimeError> {
    assert!(!goals.is_empty(), "a pipeline needs at least one goal");
    for g in goals {
        assert!(
            g.arity() <= nvars,
            "goal arity {} exceeds the pipe's {} variable slots",
            g.arity(),
            nvars
        );
    }
    let mut goals = goals.to_vec();
    if options.fold_deterministic_prefix {
        while goals.len() > 1 && goals[0].max_one_solution() {
            let folded = Goal::conj(goals.remove(0), goals[0].clone());
            goals[0] = folded;
        }
    }

    let hub = rt.hub()?;
    let trace = options
        .trace
        .then(|| Arc::new(PipeTrace::new(goals.len() + 1)));
    let mut stages = Vec::with_capacity(goals.len());
    let mut failed = None;
    for (i, g) in goals.iter().enumerate() {
        let body = stage_body(g.clone(), nvars, i + 1, trace.clone());
        match rt.spawn_link_fn(hub, body) {
            Ok(id) => stages.push(id),
            Err(e) => {
                failed = Some(e);
                break;
            }
        }
    }
    if failed.is_none() {
        // Wire each stage to its successor, then prime the head with one
        // all-unbound partial and the end marker. No solution can flow
        // before the prime, so every wiring message is queued first.
        let creator = rt.client();
        let mut sends = Vec::with_capacity(stages.len() + 2);
        for (i, id) in stages.iter().enumerate() {
            let wire = match stages.get(i + 1) {
                Some(next) => encode_thread(*next),
                None => encode_hub(hub),
            };
            sends.push((*id, wire));
        }
        let prime = encode_partial(&Bindings::new(nvars));
        sends.push((stages[0], prime.clone()));
        sends.push((stages[0], Term::atom("done")));
        for (id, t) in &sends {
            if let Err(e) = creator.send(*id, t) {
                failed = Some(e);
                break;
            }
        }
        if failed.is_none() {
            if let Some(tr) = &trace {
                tr.record(0, LinkEvent::Partial(prime));
                tr.record(0, LinkEvent::End);
            }
        }
    }
    if let Some(e) = failed {
        let _ = rt.stop_hub(hub);
        return Err(e);
    }
    Ok(PipeHandle {
        rt: rt.clone(),
        hub,
        pending_stages: Cell::new(stages.len()),
        stages,
        nvars,
        exhausted: Cell::new(false),
        trace,
    })
}

/// Results of a pipeline being drained, owning its handle.
pub struct PipeResults {
    handle: PipeHandle,
}

impl PipeResults {
    pub fn handle(&self) -> &PipeHandle {
        &self.handle
    }

    /// Stops the pipeline, consuming the drain.
    pub fn stop(self) -> Result<(), RuntimeError> {
        self.handle.stop()
    }
}

impl Iterator for PipeResults {
    type Item = Bindings;

    fn next(&mut self) -> Option<Bindings> {
        self.handle.next()
    }
}

/// Starts a pipeline and hands back its result stream. The caller stops the
/// pipe when done with it:
///
/// ```
/// use solstream::{pipeline, Goal, Runtime, Term};
///
/// let rt = Runtime::new();
/// let goals = [
///     Goal::member(0, Term::list(vec![Term::int(1), Term::int(2)])),
///     Goal::member(0, Term::list(vec![Term::int(2), Term::int(3)])),
/// ];
/// let mut results = pipeline::piped(&rt, &goals, 1).unwrap();
/// let first = results.next().unwrap();
/// assert_eq!(first.get(0), Some(&Term::int(2)));
/// assert!(results.next().is_none());
/// results.stop().unwrap();
/// ```
pub fn piped(rt: &Runtime, goals: &[Goal], nvars: usize) -> Result<PipeResults, RuntimeError> {
    Ok(PipeResults {
        handle: pipe_create(rt, goals, nvars)?,
    })
}

/// Runs the conjunction through a pipeline, drains every result, stops the
/// pipe, and returns the projected answers. Order and content match
/// [`seq_findall`] over the same goals.
pub fn piped_findall(
    rt: &Runtime,
    projection: &AnswerProjection,
    goals: &[Goal],
    nvars: usize,
) -> Result<Vec<Term>, RuntimeError> {
    assert_projection_fits(projection, nvars);
    let handle = pipe_create(rt, goals, nvars)?;
    let mut out = Vec::new();
    while let Some(b) = handle.next() {
        out.push(projection.instantiate(&b));
    }
    handle.stop()?;
    Ok(out)
}

/// Single-threaded enumeration of the conj-folded goals; the reference
/// point every pipeline result is measured against.
pub fn seq_findall(
    projection: &AnswerProjection,
    goals: &[Goal],
    nvars: usize,
) -> Result<Vec<Term>, EngineFailure> {
    assert!(!goals.is_empty(), "a conjunction needs at least one goal");
    assert_projection_fits(projection, nvars);
    let folded = Goal::conj_all(goals.iter().cloned());
    assert!(folded.arity() <= nvars);
    let mut out = Vec::new();
    for solution in folded.solutions(Bindings::new(nvars), CancelToken::new()) {
        out.push(projection.instantiate(&solution?));
    }
    Ok(out)
}

fn assert_projection_fits(projection: &AnswerProjection, nvars: usize) {
    if let Some(v) = projection.max_var() {
        assert!(
            v < nvars,
            "projection variable _G{v} out of range for {nvars} slots"
        );
    }
}

enum StageMessage {
    Partial(Bindings),
    End,
}

enum Successor {
    Stage(ThreadId),
    Results(HubId),
}

fn stage_body(
    goal: Goal,
    nvars: usize,
    link: usize,
    trace: Option<Arc<PipeTrace>>,
) -> impl FnOnce(&ThreadCtx) + Send + 'static {
    move |ctx| {
        // The wiring message arrives before anything else can be queued.
        let Ok((_, Payload::Answer(wire))) = ctx.receive_any() else {
            return;
        };
        let Some(successor) = decode_successor(&wire) else {
            log::error!("stage {} got unusable wiring {wire}", ctx.id());
            return;
        };
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
            stage_loop(ctx, &goal, nvars, link, trace.as_deref(), &successor)
        }));
        if let Err(panic) = outcome {
            // A dying stage still seals its link so the pipe can drain.
            log::error!("stage {} died mid-stream", ctx.id());
            let _ = emit_end(ctx, &successor, link, trace.as_deref());
            std::mem::drop(panic);
        }
    }
}

fn stage_loop(
    ctx: &ThreadCtx,
    goal: &Goal,
    nvars: usize,
    link: usize,
    trace: Option<&PipeTrace>,
    successor: &Successor,
) {
    loop {
        let message = match ctx.receive_any() {
            Ok((_, Payload::Answer(t))) => t,
            Ok((_, Payload::Done)) => continue,
            Err(_) => return,
        };
        match decode_message(&message, nvars) {
            Some(StageMessage::End) => {
                let _ = emit_end(ctx, successor, link, trace);
                return;
            }
            Some(StageMessage::Partial(input)) => {
                for solution in goal.solutions(input, ctx.cancel_token()) {
                    let out = match solution {
                        Ok(b) => b,
                        Err(failure) => {
                            // Mid-stream failure truncates the pipe's output
                            // but still shuts it down cleanly.
                            log::warn!("stage {} goal failed: {failure}", ctx.id());
                            let _ = emit_end(ctx, successor, link, trace);
                            return;
                        }
                    };
                    let encoded = encode_partial(&out);
                    if emit(ctx, successor, &encoded).is_err() {
                        return;
                    }
                    if let Some(tr) = trace {
                        tr.record(link, LinkEvent::Partial(encoded));
                    }
                }
            }
            None => {
                log::error!("stage {} got unusable message {message}", ctx.id());
                let _ = emit_end(ctx, successor, link, trace);
                return;
            }
        }
    }
}

fn emit(ctx: &ThreadCtx, successor: &Successor, t: &Term) -> Result<(), RuntimeError> {
    match successor {
        Successor::Stage(id) => ctx.send(*id, t),
        Successor::Results(h) => ctx.hub_send(*h, t),
    }
}

fn emit_end(
    ctx: &ThreadCtx,
    successor: &Successor,
    link: usize,
    trace: Option<&PipeTrace>,
) -> Result<(), RuntimeError> {
    emit(ctx, successor, &Term::atom("done"))?;
    if let Some(tr) = trace {
        tr.record(link, LinkEvent::End);
    }
    Ok(())
}

fn encode_thread(id: ThreadId) -> Term {
    Term::compound(
        "$thread",
        vec![
            Term::int(id.index() as i64),
            Term::int(id.generation() as i64),
        ],
    )
}

fn encode_hub(h: HubId) -> Term {
    Term::compound(
        "$hub",
        vec![
            Term::int(h.index() as i64),
            Term::int(h.generation() as i64),
        ],
    )
}

fn decode_successor(t: &Term) -> Option<Successor> {
    let Term::Compound(functor, args) = t else {
        return None;
    };
    match (functor.as_str(), args.as_ref()) {
        ("$thread", [Term::Int(i), Term::Int(g)]) => Some(Successor::Stage(ThreadId::from_parts(
            u32::try_from(*i).ok()?,
            u64::try_from(*g).ok()?,
        ))),
        ("$hub", [Term::Int(i), Term::Int(g)]) => Some(Successor::Results(HubId::from_parts(
            u32::try_from(*i).ok()?,
            u64::try_from(*g).ok()?,
        ))),
        _ => None,
    }
}

fn encode_partial(b: &Bindings) -> Term {
    let slots = (0..b.len())
        .map(|i| b.get(i).cloned().unwrap_or(Term::var(i)))
        .collect();
    Term::compound("partial", slots)
}

fn decode_message(t: &Term, nvars: usize) -> Option<StageMessage> {
    match t {
        Term::Atom(a) if a.as_str() == "done" => Some(StageMessage::End),
        Term::Compound(functor, args) if functor.as_str() == "partial" => {
            decode_partial(args, nvars).map(StageMessage::Partial)
        }
        _ => None,
    }
}

fn decode_partial(args: &[Term], nvars: usize) -> Option<Bindings> {
    if args.len() != nvars {
        return None;
    }
    let mut b = Bindings::new(nvars);
    for (i, t) in args.iter().enumerate() {
        if matches!(t, Term::Var(j) if *j == i) {
            continue;
        }
        if !b.unify_slot(i, t) {
            return None;
        }
    }
    Some(b)
}
