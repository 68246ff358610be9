//! Thread lifecycle and message passing.
//!
//! A [`Runtime`] owns a fixed-size table of thread slots and one of hub
//! slots. Spawning a goal takes a slot, starts an OS thread that enumerates
//! the goal's solutions, and streams each projected solution to the thread's
//! default recipient as an `Answer` envelope, followed by exactly one `Done`
//! when the goal is exhausted. IDs are index + generation pairs: a slot is
//! reused freely, a (index, generation) pair never is, so operations on a
//! stale ID fail instead of reaching the slot's new occupant.
//!
//! Stopping a thread is asynchronous: it sets the thread's cancel token,
//! purges the caller's mailbox of the target's envelopes, and returns. The
//! slot itself is recycled by the target's own epilogue once it observes the
//! token, within the engine's checkpoint latency. A thread that merely
//! exhausts its goal keeps its ID reserved until someone stops it; run out of
//! IDs and spawn reports [`RuntimeError::ThreadLimitExhausted`].

use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, Weak};
use std::thread::JoinHandle;
use std::time::Duration;

use crate::goal::{CancelToken, Goal};
use crate::hub::HubSlot;
use crate::mailbox::{Envelope, Mailbox, Payload};
use crate::term::{AnswerProjection, Bindings, Term};

/// Handle to a spawned thread: slot index plus the generation that was
/// current when the slot was issued. Copyable and freely transferable.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
pub struct ThreadId {
    pub(crate) index: u32,
    pub(crate) generation: u64,
}

impl ThreadId {
    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Rebuilds an ID from its raw parts, e.g. after a wire round trip. Does
    /// not validate; a made-up pair behaves like any stale ID.
    pub fn from_parts(index: u32, generation: u64) -> ThreadId {
        ThreadId { index, generation }
    }
}

impl std::fmt::Display for ThreadId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "t{}.{}", self.index, self.generation)
    }
}

/// Handle to a hub; same index + generation scheme as [`ThreadId`], in a
/// separate identifier space.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
pub struct HubId {
    pub(crate) index: u32,
    pub(crate) generation: u64,
}

impl HubId {
    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// See [`ThreadId::from_parts`].
    pub fn from_parts(index: u32, generation: u64) -> HubId {
        HubId { index, generation }
    }
}

impl std::fmt::Display for HubId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "h{}.{}", self.index, self.generation)
    }
}

/// Identity of an external mailbox owner (a [`Client`]). Never reused.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
pub struct ClientId(u64);

impl std::fmt::Display for ClientId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "c{}", self.0)
    }
}

/// Who put an envelope in a mailbox: a spawned thread or an external client.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
pub enum SenderId {
    Thread(ThreadId),
    Client(ClientId),
}

impl From<ThreadId> for SenderId {
    fn from(id: ThreadId) -> SenderId {
        SenderId::Thread(id)
    }
}

impl From<ClientId> for SenderId {
    fn from(id: ClientId) -> SenderId {
        SenderId::Client(id)
    }
}

impl std::fmt::Display for SenderId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SenderId::Thread(id) => write!(f, "{id}"),
            SenderId::Client(id) => write!(f, "{id}"),
        }
    }
}

impl SenderId {
    #[cfg(test)]
    pub(crate) fn test_sender(n: u64) -> SenderId {
        SenderId::Client(ClientId(n))
    }
}

#[derive(Clone, Debug)]
pub struct RuntimeConfig {
    /// Size of the thread-slot table, fixed for the runtime's lifetime.
    pub max_threads: usize,
    /// Size of the hub-slot table; defaults to `max_threads`.
    pub max_hubs: usize,
}

pub const DEFAULT_MAX_THREADS: usize = 256;

impl Default for RuntimeConfig {
    fn default() -> RuntimeConfig {
        RuntimeConfig {
            max_threads: DEFAULT_MAX_THREADS,
            max_hubs: DEFAULT_MAX_THREADS,
        }
    }
}

impl RuntimeConfig {
    /// Default configuration with the `MAX_THREADS` environment variable, if
    /// set to a positive integer, overriding both table sizes.
    pub fn from_env() -> RuntimeConfig {
        let mut config = RuntimeConfig::default();
        if let Ok(raw) = std::env::var("MAX_THREADS") {
            match raw.parse::<usize>() {
                Ok(n) if n > 0 => {
                    config.max_threads = n;
                    config.max_hubs = n;
                }
                _ => log::warn!("ignoring MAX_THREADS={raw:?}: not a positive integer"),
            }
        }
        config
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("all {0} thread slots are in use")]
    ThreadLimitExhausted(usize),
    #[error("all {0} hub slots are in use")]
    HubLimitExhausted(usize),
    #[error("invalid or stale thread id")]
    InvalidThread,
    #[error("invalid or stale hub id")]
    InvalidHub,
    #[error("a linked thread cannot stop its own hub")]
    SelfHubStop,
    #[error("default recipient no longer exists")]
    NoDefaultRecipient,
    #[error("interrupted by cancellation")]
    Cancelled,
    #[error("could not start an OS thread: {0}")]
    SpawnFailed(String),
}

/// Where a thread's implicit sends go.
#[derive(Clone)]
pub(crate) enum Recipient {
    Thread(ThreadId),
    Hub(HubId),
    Client(ClientId, Weak<Mailbox>),
}

pub(crate) struct LiveThread {
    pub(crate) id: ThreadId,
    pub(crate) mailbox: Arc<Mailbox>,
    pub(crate) cancel: CancelToken,
    pub(crate) join: Option<JoinHandle<()>>,
    /// Epilogue has run; the goal is exhausted but the ID is still reserved.
    pub(crate) finished: bool,
    /// Stop requested; the ID is invalid and the slot frees at the epilogue.
    pub(crate) stopping: bool,
}

pub(crate) struct ThreadSlot {
    pub(crate) generation: u64,
    pub(crate) live: Option<LiveThread>,
}

pub(crate) struct Inner {
    pub(crate) config: RuntimeConfig,
    pub(crate) threads: Mutex<Vec<ThreadSlot>>,
    pub(crate) hubs: Mutex<Vec<HubSlot>>,
    next_client: AtomicU64,
}

/// Shared handle to one runtime instance. Cloning is cheap and all clones
/// operate on the same thread and hub tables.
#[derive(Clone)]
pub struct Runtime {
    pub(crate) inner: Arc<Inner>,
}

impl Default for Runtime {
    fn default() -> Runtime {
        Runtime::new()
    }
}

impl Runtime {
    /// Runtime configured from the environment (see [`RuntimeConfig::from_env`]).
    pub fn new() -> Runtime {
        Runtime::with_config(RuntimeConfig::from_env())
    }

    pub fn with_config(config: RuntimeConfig) -> Runtime {
        assert!(config.max_threads > 0, "max_threads must be positive");
        assert!(
            config.max_threads <= u32::MAX as usize && config.max_hubs <= u32::MAX as usize,
            "table sizes must fit in u32 indices"
        );
        let threads = (0..config.max_threads)
            .map(|_| ThreadSlot {
                generation: 0,
                live: None,
            })
            .collect();
        let hubs = (0..config.max_hubs).map(|_| HubSlot::empty()).collect();
        Runtime {
            inner: Arc::new(Inner {
                config,
                threads: Mutex::new(threads),
                hubs: Mutex::new(hubs),
                next_client: AtomicU64::new(1),
            }),
        }
    }

    pub fn config(&self) -> &RuntimeConfig {
        &self.inner.config
    }

    /// A fresh external mailbox owner. Clients live outside the thread-slot
    /// table: creating one cannot exhaust thread IDs.
    pub fn client(&self) -> Client {
        let id = ClientId(self.inner.next_client.fetch_add(1, Ordering::Relaxed));
        Client {
            rt: self.clone(),
            id,
            mailbox: Arc::new(Mailbox::new()),
        }
    }

    /// Number of occupied thread slots, including exhausted-but-unstopped
    /// threads, which still hold their IDs.
    pub fn live_threads(&self) -> usize {
        let threads = self.inner.threads.lock().unwrap();
        threads.iter().filter(|s| s.live.is_some()).count()
    }

    pub fn free_thread_slots(&self) -> usize {
        self.inner.config.max_threads - self.live_threads()
    }

    /// Starts a thread that runs `body` with a context for sending, receiving
    /// and spawning. When `body` returns (or panics), the runtime sends one
    /// `Done` to the recipient, unless the thread was cancelled first.
    pub(crate) fn spawn_inner(
        &self,
        recipient: Recipient,
        linked_hub: Option<HubId>,
        body: Box<dyn FnOnce(&ThreadCtx) + Send + 'static>,
    ) -> Result<ThreadId, RuntimeError> {
        let mut threads = self.inner.threads.lock().unwrap();
        let index = threads.iter().position(|s| s.live.is_none()).ok_or(
            RuntimeError::ThreadLimitExhausted(self.inner.config.max_threads),
        )?;
        let slot = &mut threads[index];
        slot.generation += 1;
        let id = ThreadId {
            index: index as u32,
            generation: slot.generation,
        };
        let mailbox = Arc::new(Mailbox::new());
        let cancel = CancelToken::new();
        let ctx = ThreadCtx {
            rt: self.clone(),
            id,
            mailbox: Arc::clone(&mailbox),
            cancel: cancel.clone(),
            default_recipient: recipient,
            linked_hub,
        };
        let handle = std::thread::Builder::new()
            .name(format!("solstream-{id}"))
            .spawn(move || {
                let outcome = panic::catch_unwind(AssertUnwindSafe(|| body(&ctx)));
                if let Err(payload) = outcome {
                    log::debug!("{id} body panicked: {payload:?}");
                }
                ctx.epilogue();
            });
        match handle {
            Ok(handle) => {
                slot.live = Some(LiveThread {
                    id,
                    mailbox,
                    cancel,
                    join: Some(handle),
                    finished: false,
                    stopping: false,
                });
                log::debug!("{id} spawned");
                Ok(id)
            }
            Err(e) => {
                slot.generation -= 1;
                Err(RuntimeError::SpawnFailed(e.to_string()))
            }
        }
    }

    /// The standard body of a goal thread: enumerate, project, stream.
    pub(crate) fn goal_body(
        projection: AnswerProjection,
        goal: Goal,
    ) -> Box<dyn FnOnce(&ThreadCtx) + Send + 'static> {
        Box::new(move |ctx| {
            let slots = goal.arity().max(projection.max_var().map_or(0, |v| v + 1));
            for result in goal.solutions(Bindings::new(slots), ctx.cancel.clone()) {
                match result {
                    Ok(solution) => {
                        let answer = projection.instantiate(&solution);
                        // A dead recipient does not end the enumeration.
                        let _ = ctx.send_default(&answer);
                    }
                    Err(failure) => {
                        log::debug!("{} engine failure: {failure}", ctx.id);
                        break;
                    }
                }
            }
        })
    }

    /// Mailbox of a live, not-stopping thread.
    pub(crate) fn thread_mailbox(&self, id: ThreadId) -> Result<Arc<Mailbox>, RuntimeError> {
        let threads = self.inner.threads.lock().unwrap();
        let live = threads
            .get(id.index as usize)
            .and_then(|s| s.live.as_ref())
            .filter(|l| l.id == id && !l.stopping)
            .ok_or(RuntimeError::InvalidThread)?;
        Ok(Arc::clone(&live.mailbox))
    }

    /// True while `id` names a live (possibly exhausted, not stopped) thread.
    pub fn thread_is_valid(&self, id: ThreadId) -> bool {
        self.thread_mailbox(id).is_ok()
    }

    pub(crate) fn send_payload(
        &self,
        recipient: &Recipient,
        sender: SenderId,
        payload: Payload,
        cancel: Option<&CancelToken>,
    ) -> Result<(), RuntimeError> {
        let (mailbox, gone) = match recipient {
            Recipient::Thread(id) => (self.thread_mailbox(*id)?, RuntimeError::InvalidThread),
            Recipient::Hub(h) => (self.hub_mailbox(*h)?, RuntimeError::InvalidHub),
            Recipient::Client(id, weak) => {
                let mailbox = weak.upgrade().ok_or_else(|| {
                    log::trace!("send from {sender} to departed client {id} dropped");
                    RuntimeError::NoDefaultRecipient
                })?;
                (mailbox, RuntimeError::NoDefaultRecipient)
            }
        };
        let envelope = Envelope { sender, payload };
        let delivered = match cancel {
            Some(cancel) => mailbox.push_cancellable(envelope, cancel),
            None => mailbox.push(envelope),
        };
        if delivered {
            Ok(())
        } else {
            Err(cancel
                .filter(|c| c.is_cancelled())
                .map_or(gone, |_| RuntimeError::Cancelled))
        }
    }

    /// Asynchronous stop: cancels the target, invalidates its ID, purges the
    /// target's envelopes from `caller_mailbox`, and returns without waiting
    /// for the target to wind down (unless it already has, in which case the
    /// slot frees immediately).
    pub(crate) fn stop_thread(
        &self,
        id: ThreadId,
        caller_mailbox: Option<&Mailbox>,
    ) -> Result<(), RuntimeError> {
        let finished_handle = {
            let mut threads = self.inner.threads.lock().unwrap();
            let slot = threads
                .get_mut(id.index as usize)
                .ok_or(RuntimeError::InvalidThread)?;
            let live = slot
                .live
                .as_mut()
                .filter(|l| l.id == id && !l.stopping)
                .ok_or(RuntimeError::InvalidThread)?;
            live.stopping = true;
            live.cancel.cancel();
            live.mailbox.wake_all();
            if live.finished {
                let handle = live.join.take();
                let mailbox = Arc::clone(&live.mailbox);
                slot.live = None;
                mailbox.close();
                handle
            } else {
                None
            }
        };
        if let Some(mailbox) = caller_mailbox {
            let purged = mailbox.purge_sender(SenderId::Thread(id));
            log::debug!("{id} stopped, {purged} envelopes purged");
        } else {
            log::debug!("{id} stopped");
        }
        if let Some(handle) = finished_handle {
            let _ = handle.join();
        }
        Ok(())
    }

    /// Slot bookkeeping run by every thread as its last act.
    pub(crate) fn finish_thread(&self, id: ThreadId) {
        let mut threads = self.inner.threads.lock().unwrap();
        let Some(slot) = threads.get_mut(id.index as usize) else {
            return;
        };
        let Some(live) = slot.live.as_mut().filter(|l| l.id == id) else {
            return;
        };
        if live.stopping {
            // Stopped: release the slot ourselves; nobody joins us.
            let _detach = live.join.take();
            let mailbox = Arc::clone(&live.mailbox);
            slot.live = None;
            mailbox.close();
            log::debug!("{id} slot recycled");
        } else {
            live.finished = true;
            log::debug!("{id} exhausted, id reserved");
        }
    }
}

/// An external mailbox owner: the embedding program's own identity for
/// spawning threads and exchanging messages with them. Not clonable; each
/// client is the single consumer of its mailbox. Dropping it closes the
/// mailbox.
pub struct Client {
    rt: Runtime,
    id: ClientId,
    mailbox: Arc<Mailbox>,
}

impl Drop for Client {
    fn drop(&mut self) {
        self.mailbox.close();
    }
}

impl Client {
    pub fn id(&self) -> ClientId {
        self.id
    }

    pub fn sender_id(&self) -> SenderId {
        SenderId::Client(self.id)
    }

    pub fn runtime(&self) -> &Runtime {
        &self.rt
    }

    /// Spawns a thread enumerating `goal`; each solution arrives in this
    /// client's mailbox as `Answer(projection instantiated)`, then one `Done`.
    pub fn spawn(
        &self,
        projection: &AnswerProjection,
        goal: &Goal,
    ) -> Result<ThreadId, RuntimeError> {
        self.rt.spawn_inner(
            Recipient::Client(self.id, Arc::downgrade(&self.mailbox)),
            None,
            Runtime::goal_body(projection.clone(), goal.clone()),
        )
    }

    /// Spawns a thread running an arbitrary body; `Done` is still delivered
    /// here when the body returns.
    pub fn spawn_fn(
        &self,
        body: impl FnOnce(&ThreadCtx) + Send + 'static,
    ) -> Result<ThreadId, RuntimeError> {
        self.rt.spawn_inner(
            Recipient::Client(self.id, Arc::downgrade(&self.mailbox)),
            None,
            Box::new(body),
        )
    }

    /// Sends `Answer(t)` to a thread, exactly as solution streaming would.
    pub fn send(&self, target: ThreadId, t: &Term) -> Result<(), RuntimeError> {
        self.rt.send_payload(
            &Recipient::Thread(target),
            self.sender_id(),
            Payload::Answer(t.snapshot()),
            None,
        )
    }

    /// Blocks until any envelope arrives.
    pub fn receive_any(&self) -> (SenderId, Payload) {
        let e = self
            .mailbox
            .receive_any(None)
            .expect("client mailbox cannot close while the client is alive");
        (e.sender, e.payload)
    }

    /// Blocks until an envelope from `sender` arrives; other envelopes stay
    /// queued. Thread senders are validated first, so a stale ID fails
    /// instead of blocking forever.
    pub fn receive_from(&self, sender: impl Into<SenderId>) -> Result<Payload, RuntimeError> {
        let sender = sender.into();
        self.rt.validate_sender(sender)?;
        let e = self
            .mailbox
            .receive_from(sender, None)
            .expect("client mailbox cannot close while the client is alive");
        Ok(e.payload)
    }

    pub fn receive_any_for(&self, timeout: Duration) -> Option<(SenderId, Payload)> {
        self.mailbox
            .receive_any_for(timeout, None)
            .expect("client mailbox cannot close while the client is alive")
            .map(|e| (e.sender, e.payload))
    }

    pub fn receive_from_for(
        &self,
        sender: impl Into<SenderId>,
        timeout: Duration,
    ) -> Result<Option<Payload>, RuntimeError> {
        let sender = sender.into();
        self.rt.validate_sender(sender)?;
        Ok(self
            .mailbox
            .receive_from_for(sender, timeout, None)
            .expect("client mailbox cannot close while the client is alive")
            .map(|e| e.payload))
    }

    /// Asynchronously stops a thread; see [`Runtime::stop_thread`] semantics.
    /// Envelopes from the target still in this client's mailbox are purged.
    pub fn stop(&self, id: ThreadId) -> Result<(), RuntimeError> {
        self.rt.stop_thread(id, Some(&self.mailbox))
    }

    /// How many envelopes are waiting, without consuming any.
    pub fn pending(&self) -> usize {
        self.mailbox.len()
    }
}

impl Runtime {
    fn validate_sender(&self, sender: SenderId) -> Result<(), RuntimeError> {
        match sender {
            SenderId::Thread(id) => self.thread_mailbox(id).map(|_| ()),
            // Client liveness is not tracked in a table; trust the caller.
            SenderId::Client(_) => Ok(()),
        }
    }
}

/// Execution context handed to a spawned thread's body: its identity, its
/// mailbox, its cancel token, and its default recipient.
pub struct ThreadCtx {
    rt: Runtime,
    id: ThreadId,
    mailbox: Arc<Mailbox>,
    pub(crate) cancel: CancelToken,
    default_recipient: Recipient,
    linked_hub: Option<HubId>,
}

impl ThreadCtx {
    pub fn id(&self) -> ThreadId {
        self.id
    }

    pub fn sender_id(&self) -> SenderId {
        SenderId::Thread(self.id)
    }

    pub fn runtime(&self) -> &Runtime {
        &self.rt
    }

    pub fn cancel_token(&self) -> CancelToken {
        self.cancel.clone()
    }

    pub fn is_cancelled(&self) -> bool {
        self.cancel.is_cancelled()
    }

    /// The hub this thread is linked to, if it was started by `spawn_link`.
    pub fn linked_hub(&self) -> Option<HubId> {
        self.linked_hub
    }

    /// Sends `Answer(t)` to this thread's default recipient (its spawner, or
    /// its hub if linked).
    pub fn send_default(&self, t: &Term) -> Result<(), RuntimeError> {
        self.rt.send_payload(
            &self.default_recipient,
            self.sender_id(),
            Payload::Answer(t.snapshot()),
            Some(&self.cancel),
        )
    }

    /// Sends `Answer(t)` to an explicit thread target.
    pub fn send(&self, target: ThreadId, t: &Term) -> Result<(), RuntimeError> {
        self.rt.send_payload(
            &Recipient::Thread(target),
            self.sender_id(),
            Payload::Answer(t.snapshot()),
            Some(&self.cancel),
        )
    }

    /// Blocks until any envelope arrives; fails with `Cancelled` if this
    /// thread is stopped while waiting.
    pub fn receive_any(&self) -> Result<(SenderId, Payload), RuntimeError> {
        self.mailbox
            .receive_any(Some(&self.cancel))
            .map(|e| (e.sender, e.payload))
            .map_err(|_| RuntimeError::Cancelled)
    }

    /// Selective blocking receive, as [`Client::receive_from`].
    pub fn receive_from(&self, sender: impl Into<SenderId>) -> Result<Payload, RuntimeError> {
        let sender = sender.into();
        self.rt.validate_sender(sender)?;
        self.mailbox
            .receive_from(sender, Some(&self.cancel))
            .map(|e| e.payload)
            .map_err(|_| RuntimeError::Cancelled)
    }

    /// Spawns a child goal thread whose default recipient is this thread.
    /// Children are independent: stopping this thread does not stop them.
    pub fn spawn(
        &self,
        projection: &AnswerProjection,
        goal: &Goal,
    ) -> Result<ThreadId, RuntimeError> {
        self.rt.spawn_inner(
            Recipient::Thread(self.id),
            None,
            Runtime::goal_body(projection.clone(), goal.clone()),
        )
    }

    pub fn spawn_fn(
        &self,
        body: impl FnOnce(&ThreadCtx) + Send + 'static,
    ) -> Result<ThreadId, RuntimeError> {
        self.rt
            .spawn_inner(Recipient::Thread(self.id), None, Box::new(body))
    }

    /// Asynchronously stops a thread, purging its envelopes from this
    /// thread's mailbox. Stopping oneself is allowed and takes effect at the
    /// next checkpoint.
    pub fn stop(&self, id: ThreadId) -> Result<(), RuntimeError> {
        self.rt.stop_thread(id, Some(&self.mailbox))
    }

    fn epilogue(&self) {
        // Mark the slot first so a recipient that reacts to the `Done` by
        // stopping us takes the synchronous path and finds the slot free on
        // its next spawn.
        self.rt.finish_thread(self.id);
        if !self.cancel.is_cancelled() {
            let _ = self.rt.send_payload(
                &self.default_recipient,
                self.sender_id(),
                Payload::Done,
                Some(&self.cancel),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::instantiate;
    use std::time::Instant;

    fn var0() -> AnswerProjection {
        AnswerProjection::new(Term::var(0))
    }

    fn small_rt(max_threads: usize) -> Runtime {
        Runtime::with_config(RuntimeConfig {
            max_threads,
            max_hubs: max_threads,
        })
    }

    fn ints(items: &[i64]) -> Term {
        Term::list(items.iter().copied().map(Term::int).collect())
    }

    /// Receives until Done, asserting everything comes from `from`.
    fn drain_answers(client: &Client, from: ThreadId) -> Vec<Term> {
        let mut answers = Vec::new();
        loop {
            let (sender, payload) = client.receive_any();
            assert_eq!(sender, SenderId::Thread(from));
            match payload {
                Payload::Answer(t) => answers.push(t),
                Payload::Done => return answers,
            }
        }
    }

    #[test]
    fn one_solution_goal_streams_answer_then_done() {
        let rt = small_rt(4);
        let client = rt.client();
        let t = client.spawn(&var0(), &Goal::member(0, ints(&[7]))).unwrap();
        assert_eq!(drain_answers(&client, t), vec![Term::int(7)]);
    }

    #[test]
    fn zero_solution_goal_sends_done_only() {
        let rt = small_rt(4);
        let client = rt.client();
        let t = client.spawn(&var0(), &Goal::fail_goal()).unwrap();
        assert_eq!(drain_answers(&client, t), vec![]);
    }

    #[test]
    fn projected_conjunction_streams_in_order() {
        let rt = small_rt(4);
        let client = rt.client();
        let plus_ten = Goal::from_function(2, |b| {
            let Term::Int(n) = b.resolve(&Term::var(0)) else {
                return vec![];
            };
            let mut out = b.clone();
            assert!(out.unify_slot(1, &Term::int(n + 10)));
            vec![out]
        });
        let goal = Goal::conj(Goal::member(0, ints(&[1, 2])), plus_ten);
        let t = client
            .spawn(&AnswerProjection::new(Term::var(1)), &goal)
            .unwrap();
        assert_eq!(
            drain_answers(&client, t),
            vec![Term::int(11), Term::int(12)]
        );
    }

    #[test]
    fn engine_failure_still_delivers_done() {
        let rt = small_rt(4);
        let client = rt.client();
        let t = client
            .spawn(&var0(), &Goal::member(0, Term::atom("not_a_list")))
            .unwrap();
        assert_eq!(drain_answers(&client, t), vec![]);
    }

    #[test]
    fn loopback_send_to_self() {
        let rt = small_rt(4);
        let client = rt.client();
        let t = client
            .spawn_fn(|ctx| {
                ctx.send(ctx.id(), &Term::atom("ping")).unwrap();
                let (sender, payload) = ctx.receive_any().unwrap();
                assert_eq!(sender, ctx.sender_id());
                assert_eq!(payload, Payload::Answer(Term::atom("ping")));
                ctx.send_default(&Term::atom("ok")).unwrap();
            })
            .unwrap();
        assert_eq!(drain_answers(&client, t), vec![Term::atom("ok")]);
    }

    #[test]
    fn send_to_stale_id_fails() {
        let rt = small_rt(4);
        let client = rt.client();
        let t = client.spawn(&var0(), &Goal::fail_goal()).unwrap();
        assert_eq!(client.receive_from(t).unwrap(), Payload::Done);
        client.stop(t).unwrap();
        assert_eq!(
            client.send(t, &Term::int(1)),
            Err(RuntimeError::InvalidThread)
        );
        assert_eq!(client.receive_from(t), Err(RuntimeError::InvalidThread));
        assert_eq!(client.stop(t), Err(RuntimeError::InvalidThread));
    }

    #[test]
    fn slot_reuse_bumps_generation() {
        let rt = small_rt(1);
        let client = rt.client();
        let first = client.spawn(&var0(), &Goal::fail_goal()).unwrap();
        assert_eq!(client.receive_from(first).unwrap(), Payload::Done);
        client.stop(first).unwrap();
        let second = client.spawn(&var0(), &Goal::fail_goal()).unwrap();
        assert_eq!(second.index, first.index);
        assert_ne!(second.generation, first.generation);
        assert_eq!(
            client.send(first, &Term::int(1)),
            Err(RuntimeError::InvalidThread)
        );
        client.stop(second).unwrap();
    }

    #[test]
    fn thread_limit_reports_exhaustion() {
        let rt = small_rt(2);
        let client = rt.client();
        let a = client.spawn(&var0(), &Goal::between(0, 1, None)).unwrap();
        let b = client.spawn(&var0(), &Goal::between(0, 1, None)).unwrap();
        assert_eq!(
            client.spawn(&var0(), &Goal::fail_goal()),
            Err(RuntimeError::ThreadLimitExhausted(2))
        );
        client.stop(a).unwrap();
        client.stop(b).unwrap();
    }

    #[test]
    fn exhausted_goal_keeps_its_id_until_stopped() {
        let rt = small_rt(1);
        let client = rt.client();
        let t = client.spawn(&var0(), &Goal::fail_goal()).unwrap();
        assert_eq!(client.receive_from(t).unwrap(), Payload::Done);
        // Slot is still held by the exhausted thread.
        assert_eq!(
            client.spawn(&var0(), &Goal::fail_goal()),
            Err(RuntimeError::ThreadLimitExhausted(1))
        );
        client.stop(t).unwrap();
        let t2 = client.spawn(&var0(), &Goal::fail_goal()).unwrap();
        assert_eq!(client.receive_from(t2).unwrap(), Payload::Done);
    }

    #[test]
    fn stop_of_busy_thread_returns_quickly_and_frees_slot() {
        let rt = small_rt(1);
        let client = rt.client();
        let t = client.spawn(&var0(), &Goal::between(0, 1, None)).unwrap();
        // Let it start producing.
        let (_, first) = client.receive_any();
        assert!(matches!(first, Payload::Answer(_)));
        let before = Instant::now();
        client.stop(t).unwrap();
        assert!(before.elapsed() < Duration::from_millis(100));
        let deadline = Instant::now() + Duration::from_millis(500);
        while rt.free_thread_slots() == 0 {
            assert!(Instant::now() < deadline, "slot not recycled in time");
            std::thread::sleep(Duration::from_millis(1));
        }
    }

    #[test]
    fn stop_purges_pending_envelopes_from_target() {
        let rt = small_rt(2);
        let client = rt.client();
        let noisy = client
            .spawn(&var0(), &Goal::member(0, ints(&[1, 2, 3])))
            .unwrap();
        // Wait for the full stream, then also queue one from another thread.
        while client.pending() < 4 {
            std::thread::sleep(Duration::from_millis(1));
        }
        let other = client.spawn(&var0(), &Goal::member(0, ints(&[9]))).unwrap();
        while client.pending() < 6 {
            std::thread::sleep(Duration::from_millis(1));
        }
        client.stop(noisy).unwrap();
        assert_eq!(drain_answers(&client, other), vec![Term::int(9)]);
        assert_eq!(client.pending(), 0);
    }

    #[test]
    fn children_survive_their_parent_being_stopped() {
        let rt = small_rt(4);
        let client = rt.client();
        let parent = client
            .spawn_fn(move |ctx| {
                let child = ctx
                    .spawn(
                        &AnswerProjection::new(Term::var(0)),
                        &Goal::between(0, 1, None),
                    )
                    .unwrap();
                // Tell the client who the child is, then idle until stopped.
                ctx.send_default(&Term::compound(
                    "child",
                    vec![
                        Term::int(child.index as i64),
                        Term::int(child.generation as i64),
                    ],
                ))
                .unwrap();
                loop {
                    if ctx.receive_any().is_err() {
                        return;
                    }
                }
            })
            .unwrap();
        let Payload::Answer(Term::Compound(_, args)) = client.receive_from(parent).unwrap() else {
            panic!("expected child id");
        };
        let (Term::Int(index), Term::Int(generation)) = (&args[0], &args[1]) else {
            panic!("expected ints");
        };
        let child = ThreadId {
            index: *index as u32,
            generation: *generation as u64,
        };
        client.stop(parent).unwrap();
        std::thread::sleep(Duration::from_millis(50));
        // The child is still live and producing to its own (dead) recipient.
        assert!(rt.thread_is_valid(child));
        client.stop(child).unwrap();
    }

    #[test]
    fn done_arrives_after_all_answers_from_fn_threads() {
        let rt = small_rt(4);
        let client = rt.client();
        let t = client
            .spawn_fn(|ctx| {
                for n in 0..5 {
                    ctx.send_default(&Term::int(n)).unwrap();
                }
            })
            .unwrap();
        assert_eq!(drain_answers(&client, t).len(), 5);
    }

    #[test]
    fn interleaved_streams_keep_per_sender_order() {
        let rt = small_rt(8);
        let client = rt.client();
        let items: Vec<i64> = (0..50).collect();
        let goals: Vec<ThreadId> = (0..4)
            .map(|_| {
                client
                    .spawn(&var0(), &Goal::member(0, ints(&items)))
                    .unwrap()
            })
            .collect();
        let mut seen: std::collections::HashMap<SenderId, Vec<i64>> = Default::default();
        let mut done = 0;
        while done < goals.len() {
            let (sender, payload) = client.receive_any();
            match payload {
                Payload::Answer(Term::Int(n)) => seen.entry(sender).or_default().push(n),
                Payload::Answer(other) => panic!("unexpected {other}"),
                Payload::Done => done += 1,
            }
        }
        assert_eq!(seen.len(), 4);
        for stream in seen.values() {
            assert_eq!(*stream, items);
        }
    }

    #[test]
    fn projection_shapes_the_answer_term() {
        let rt = small_rt(4);
        let client = rt.client();
        let projection = AnswerProjection::new(Term::compound(
            "solved",
            vec![Term::var(0), Term::atom("fixed")],
        ));
        let t = client
            .spawn(&projection, &Goal::member(0, ints(&[3])))
            .unwrap();
        assert_eq!(
            drain_answers(&client, t),
            vec![Term::compound(
                "solved",
                vec![Term::int(3), Term::atom("fixed")]
            )]
        );
        let b = Bindings::new(1);
        let _ = instantiate(&Term::var(0), &b);
    }
}
