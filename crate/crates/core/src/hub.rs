//! Hubs: shared mailboxes with a linked-thread lifecycle.
//!
//! A hub is a mailbox that is nobody's thread: any number of threads can be
//! spawn-linked to it, making the hub their default recipient, and any thread
//! or client can receive from it. Stopping a hub is the one synchronous
//! teardown in the runtime: it cancels every linked thread, joins them all,
//! and only then returns, so the caller knows all linked resources are gone.
//! Contrast with the asynchronous [`Runtime::stop_thread`] semantics.

use std::sync::Arc;
use std::time::Duration;

use crate::goal::{CancelToken, Goal};
use crate::mailbox::{Mailbox, Payload, RecvError};
use crate::runtime::{
    Client, HubId, Recipient, Runtime, RuntimeError, SenderId, ThreadCtx, ThreadId,
};
use crate::term::{AnswerProjection, Term};

/// How often a spawned thread blocked on a hub re-checks its cancel token.
/// Cancellation wakes a thread's own mailbox directly; hub waits are shared,
/// so they poll at this interval instead.
const HUB_WAIT_SLICE: Duration = Duration::from_millis(25);

pub(crate) struct LiveHub {
    pub(crate) id: HubId,
    pub(crate) mailbox: Arc<Mailbox>,
    pub(crate) linked: Vec<ThreadId>,
    pub(crate) stopping: bool,
}

pub(crate) struct HubSlot {
    pub(crate) generation: u64,
    pub(crate) live: Option<LiveHub>,
}

impl HubSlot {
    pub(crate) fn empty() -> HubSlot {
        HubSlot {
            generation: 0,
            live: None,
        }
    }
}

impl Runtime {
    /// Allocates an empty hub with no linked threads.
    pub fn hub(&self) -> Result<HubId, RuntimeError> {
        let mut hubs = self.inner.hubs.lock().unwrap();
        let index = hubs
            .iter()
            .position(|s| s.live.is_none())
            .ok_or(RuntimeError::HubLimitExhausted(self.inner.config.max_hubs))?;
        let slot = &mut hubs[index];
        slot.generation += 1;
        let id = HubId {
            index: index as u32,
            generation: slot.generation,
        };
        slot.live = Some(LiveHub {
            id,
            mailbox: Arc::new(Mailbox::new()),
            linked: Vec::new(),
            stopping: false,
        });
        log::debug!("{id} created");
        Ok(id)
    }

    pub(crate) fn hub_mailbox(&self, h: HubId) -> Result<Arc<Mailbox>, RuntimeError> {
        let hubs = self.inner.hubs.lock().unwrap();
        let live = hubs
            .get(h.index as usize)
            .and_then(|s| s.live.as_ref())
            .filter(|l| l.id == h && !l.stopping)
            .ok_or(RuntimeError::InvalidHub)?;
        Ok(Arc::clone(&live.mailbox))
    }

    pub fn hub_is_valid(&self, h: HubId) -> bool {
        self.hub_mailbox(h).is_ok()
    }

    pub fn live_hubs(&self) -> usize {
        let hubs = self.inner.hubs.lock().unwrap();
        hubs.iter().filter(|s| s.live.is_some()).count()
    }

    /// Spawns a goal thread whose default recipient is the hub: all its
    /// Answer envelopes and its final Done land there, and stopping the hub
    /// stops the thread.
    pub fn spawn_link(
        &self,
        h: HubId,
        projection: &AnswerProjection,
        goal: &Goal,
    ) -> Result<ThreadId, RuntimeError> {
        self.spawn_link_inner(h, Runtime::goal_body(projection.clone(), goal.clone()))
    }

    /// As [`Runtime::spawn_link`] for an arbitrary body.
    pub fn spawn_link_fn(
        &self,
        h: HubId,
        body: impl FnOnce(&ThreadCtx) + Send + 'static,
    ) -> Result<ThreadId, RuntimeError> {
        self.spawn_link_inner(h, Box::new(body))
    }

    fn spawn_link_inner(
        &self,
        h: HubId,
        body: Box<dyn FnOnce(&ThreadCtx) + Send + 'static>,
    ) -> Result<ThreadId, RuntimeError> {
        // Register under the hub lock so a concurrent stop_hub either refuses
        // this spawn or is guaranteed to see the new thread in the linked set.
        let mut hubs = self.inner.hubs.lock().unwrap();
        let live = hubs
            .get_mut(h.index as usize)
            .and_then(|s| s.live.as_mut())
            .filter(|l| l.id == h && !l.stopping)
            .ok_or(RuntimeError::InvalidHub)?;
        let id = self.spawn_inner(Recipient::Hub(h), Some(h), body)?;
        live.linked.push(id);
        Ok(id)
    }

    pub(crate) fn hub_receive_any_inner(
        &self,
        h: HubId,
        cancel: Option<&CancelToken>,
    ) -> Result<(SenderId, Payload), RuntimeError> {
        let mailbox = self.hub_mailbox(h)?;
        loop {
            let slice = match cancel {
                None => mailbox.receive_any(None).map(Some),
                Some(c) => mailbox.receive_any_for(HUB_WAIT_SLICE, Some(c)),
            };
            match slice {
                Ok(Some(e)) => return Ok((e.sender, e.payload)),
                Ok(None) => continue,
                Err(RecvError::Closed) => return Err(RuntimeError::InvalidHub),
                Err(RecvError::Cancelled) => return Err(RuntimeError::Cancelled),
            }
        }
    }

    pub(crate) fn hub_receive_from_inner(
        &self,
        h: HubId,
        sender: SenderId,
        cancel: Option<&CancelToken>,
    ) -> Result<Payload, RuntimeError> {
        if let SenderId::Thread(id) = sender {
            self.thread_mailbox(id)?;
        }
        let mailbox = self.hub_mailbox(h)?;
        loop {
            let slice = match cancel {
                None => mailbox.receive_from(sender, None).map(Some),
                Some(c) => mailbox.receive_from_for(sender, HUB_WAIT_SLICE, Some(c)),
            };
            match slice {
                Ok(Some(e)) => return Ok(e.payload),
                Ok(None) => continue,
                Err(RecvError::Closed) => return Err(RuntimeError::InvalidHub),
                Err(RecvError::Cancelled) => return Err(RuntimeError::Cancelled),
            }
        }
    }

    /// Blocks until any envelope reaches the hub.
    pub fn hub_receive_any(&self, h: HubId) -> Result<(SenderId, Payload), RuntimeError> {
        self.hub_receive_any_inner(h, None)
    }

    /// Selective blocking receive on the hub's queue.
    pub fn hub_receive_from(
        &self,
        h: HubId,
        sender: impl Into<SenderId>,
    ) -> Result<Payload, RuntimeError> {
        self.hub_receive_from_inner(h, sender.into(), None)
    }

    /// As [`Runtime::hub_receive_any`] with a timeout; `Ok(None)` on expiry.
    pub fn hub_receive_any_for(
        &self,
        h: HubId,
        timeout: Duration,
    ) -> Result<Option<(SenderId, Payload)>, RuntimeError> {
        let mailbox = self.hub_mailbox(h)?;
        match mailbox.receive_any_for(timeout, None) {
            Ok(found) => Ok(found.map(|e| (e.sender, e.payload))),
            Err(RecvError::Closed) => Err(RuntimeError::InvalidHub),
            Err(RecvError::Cancelled) => Err(RuntimeError::Cancelled),
        }
    }

    /// Synchronously stops the hub: cancels every linked thread, joins them
    /// all, then frees the hub and every involved ID. When this returns, no
    /// linked execution context remains schedulable and all their thread
    /// slots are reusable. Threads the linked threads spawned without linking
    /// are not touched.
    pub fn stop_hub(&self, h: HubId) -> Result<(), RuntimeError> {
        // Claim the hub; a second concurrent stop_hub finds it stopping and
        // fails as on a stale ID.
        let (mailbox, linked) = {
            let mut hubs = self.inner.hubs.lock().unwrap();
            let live = hubs
                .get_mut(h.index as usize)
                .and_then(|s| s.live.as_mut())
                .filter(|l| l.id == h && !l.stopping)
                .ok_or(RuntimeError::InvalidHub)?;
            live.stopping = true;
            (Arc::clone(&live.mailbox), std::mem::take(&mut live.linked))
        };
        // Wake anything blocked on the hub before joining: a linked thread
        // waiting on its own hub would otherwise never observe cancellation.
        mailbox.close();
        let mut handles = Vec::new();
        {
            let mut threads = self.inner.threads.lock().unwrap();
            for id in &linked {
                let Some(slot) = threads.get_mut(id.index as usize) else {
                    continue;
                };
                let Some(live) = slot.live.as_mut().filter(|l| l.id == *id) else {
                    continue;
                };
                live.stopping = true;
                live.cancel.cancel();
                live.mailbox.wake_all();
                if let Some(handle) = live.join.take() {
                    handles.push(handle);
                }
                if live.finished {
                    // Its epilogue already ran; free the slot here.
                    let mb = Arc::clone(&live.mailbox);
                    slot.live = None;
                    mb.close();
                }
            }
        }
        for handle in handles {
            let _ = handle.join();
        }
        let mut hubs = self.inner.hubs.lock().unwrap();
        if let Some(slot) = hubs.get_mut(h.index as usize) {
            if slot.live.as_ref().is_some_and(|l| l.id == h) {
                slot.live = None;
            }
        }
        log::debug!("{h} stopped, {} linked threads joined", linked.len());
        Ok(())
    }
}

impl Client {
    /// Sends `Answer(t)` to a hub under this client's sender identity.
    pub fn hub_send(&self, h: HubId, t: &Term) -> Result<(), RuntimeError> {
        self.runtime().send_payload(
            &Recipient::Hub(h),
            self.sender_id(),
            Payload::Answer(t.snapshot()),
            None,
        )
    }

    pub fn hub_receive_any(&self, h: HubId) -> Result<(SenderId, Payload), RuntimeError> {
        self.runtime().hub_receive_any(h)
    }

    pub fn hub_receive_from(
        &self,
        h: HubId,
        sender: impl Into<SenderId>,
    ) -> Result<Payload, RuntimeError> {
        self.runtime().hub_receive_from(h, sender)
    }

    /// See [`Runtime::stop_hub`].
    pub fn stop_hub(&self, h: HubId) -> Result<(), RuntimeError> {
        self.runtime().stop_hub(h)
    }
}

impl ThreadCtx {
    pub fn hub_send(&self, h: HubId, t: &Term) -> Result<(), RuntimeError> {
        self.runtime().clone().send_payload(
            &Recipient::Hub(h),
            self.sender_id(),
            Payload::Answer(t.snapshot()),
            Some(&self.cancel),
        )
    }

    /// Hub receive that honors this thread's cancel token.
    pub fn hub_receive_any(&self, h: HubId) -> Result<(SenderId, Payload), RuntimeError> {
        let rt = self.runtime().clone();
        rt.hub_receive_any_inner(h, Some(&self.cancel))
    }

    pub fn hub_receive_from(
        &self,
        h: HubId,
        sender: impl Into<SenderId>,
    ) -> Result<Payload, RuntimeError> {
        let rt = self.runtime().clone();
        rt.hub_receive_from_inner(h, sender.into(), Some(&self.cancel))
    }

    /// As [`Runtime::stop_hub`], except that stopping this thread's own hub
    /// is refused: the synchronous join would deadlock on the caller itself.
    pub fn stop_hub(&self, h: HubId) -> Result<(), RuntimeError> {
        if self.linked_hub() == Some(h) {
            return Err(RuntimeError::SelfHubStop);
        }
        self.runtime().clone().stop_hub(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::RuntimeConfig;
    use std::time::Instant;

    fn rt(max: usize) -> Runtime {
        Runtime::with_config(RuntimeConfig {
            max_threads: max,
            max_hubs: max,
        })
    }

    fn var0() -> AnswerProjection {
        AnswerProjection::new(Term::var(0))
    }

    fn ints(items: &[i64]) -> Term {
        Term::list(items.iter().copied().map(Term::int).collect())
    }

    #[test]
    fn hub_send_receive_round_trip() {
        let rt = rt(4);
        let client = rt.client();
        let h = rt.hub().unwrap();
        client.hub_send(h, &Term::atom("hello")).unwrap();
        let (sender, payload) = client.hub_receive_any(h).unwrap();
        assert_eq!(sender, client.sender_id());
        assert_eq!(payload, Payload::Answer(Term::atom("hello")));
        rt.stop_hub(h).unwrap();
    }

    #[test]
    fn linked_goal_streams_answers_then_done_to_hub() {
        let rt = rt(4);
        let h = rt.hub().unwrap();
        let t = rt
            .spawn_link(h, &var0(), &Goal::member(0, ints(&[4, 5])))
            .unwrap();
        let mut answers = Vec::new();
        while let Payload::Answer(term) = rt.hub_receive_from(h, t).unwrap() {
            answers.push(term);
        }
        assert_eq!(answers, vec![Term::int(4), Term::int(5)]);
        rt.stop_hub(h).unwrap();
    }

    #[test]
    fn competing_solvers_race_to_the_hub() {
        let rt = rt(8);
        let h = rt.hub().unwrap();
        rt.spawn_link(h, &var0(), &Goal::between(0, 1, None))
            .unwrap();
        rt.spawn_link(h, &var0(), &Goal::succeed_with(0, Term::atom("fast")))
            .unwrap();
        let (_, payload) = rt.hub_receive_any(h).unwrap();
        assert!(matches!(payload, Payload::Answer(_)));
        rt.stop_hub(h).unwrap();
        assert_eq!(rt.live_threads(), 0);
    }

    #[test]
    fn selective_hub_receive_skips_other_senders() {
        let rt = rt(4);
        let h = rt.hub().unwrap();
        let t1 = rt
            .spawn_link(h, &var0(), &Goal::member(0, ints(&[1])))
            .unwrap();
        // Wait until t1's answer and done are queued.
        let mailbox = rt.hub_mailbox(h).unwrap();
        while mailbox.len() < 2 {
            std::thread::sleep(Duration::from_millis(1));
        }
        let t2 = rt
            .spawn_link(h, &var0(), &Goal::member(0, ints(&[2])))
            .unwrap();
        assert_eq!(
            rt.hub_receive_from(h, t2).unwrap(),
            Payload::Answer(Term::int(2))
        );
        assert_eq!(
            rt.hub_receive_from(h, t1).unwrap(),
            Payload::Answer(Term::int(1))
        );
        rt.stop_hub(h).unwrap();
    }

    #[test]
    fn stop_hub_joins_all_linked_threads() {
        let rt = rt(8);
        let h = rt.hub().unwrap();
        for _ in 0..3 {
            rt.spawn_link(h, &var0(), &Goal::between(0, 1, None))
                .unwrap();
        }
        assert_eq!(rt.live_threads(), 3);
        rt.stop_hub(h).unwrap();
        // Synchronous: all three slots are free the moment it returns.
        assert_eq!(rt.live_threads(), 0);
        assert_eq!(rt.live_hubs(), 0);
    }

    #[test]
    fn stop_hub_on_empty_hub_is_immediate() {
        let rt = rt(4);
        let h = rt.hub().unwrap();
        let before = Instant::now();
        rt.stop_hub(h).unwrap();
        assert!(before.elapsed() < Duration::from_millis(50));
        assert_eq!(rt.stop_hub(h), Err(RuntimeError::InvalidHub));
    }

    #[test]
    fn stopped_hub_refuses_spawn_link_and_sends() {
        let rt = rt(4);
        let client = rt.client();
        let h = rt.hub().unwrap();
        rt.stop_hub(h).unwrap();
        assert_eq!(
            rt.spawn_link(h, &var0(), &Goal::fail_goal()),
            Err(RuntimeError::InvalidHub)
        );
        assert_eq!(
            client.hub_send(h, &Term::int(1)),
            Err(RuntimeError::InvalidHub)
        );
        assert_eq!(rt.hub_receive_any(h), Err(RuntimeError::InvalidHub));
    }

    #[test]
    fn hub_ids_are_not_reissued() {
        let rt = rt(4);
        let first = rt.hub().unwrap();
        rt.stop_hub(first).unwrap();
        let second = rt.hub().unwrap();
        assert_ne!(first, second);
        assert_eq!(rt.stop_hub(first), Err(RuntimeError::InvalidHub));
        rt.stop_hub(second).unwrap();
    }

    #[test]
    fn hub_limit_is_enforced() {
        let rt = rt(2);
        let _a = rt.hub().unwrap();
        let _b = rt.hub().unwrap();
        assert_eq!(rt.hub(), Err(RuntimeError::HubLimitExhausted(2)));
    }

    #[test]
    fn unlinked_children_of_linked_threads_survive_stop_hub() {
        let rt = rt(8);
        let h = rt.hub().unwrap();
        rt.spawn_link_fn(h, |ctx| {
            let child = ctx
                .spawn(
                    &AnswerProjection::new(Term::var(0)),
                    &Goal::between(0, 1, None),
                )
                .unwrap();
            ctx.hub_send(
                ctx.linked_hub().unwrap(),
                &Term::compound(
                    "child",
                    vec![
                        Term::int(child.index() as i64),
                        Term::int(child.generation() as i64),
                    ],
                ),
            )
            .unwrap();
            // Idle until the hub teardown cancels us.
            while ctx.receive_any().is_ok() {}
        })
        .unwrap();
        let child = loop {
            let (_, payload) = rt.hub_receive_any(h).unwrap();
            if let Payload::Answer(Term::Compound(_, args)) = payload {
                let (Term::Int(index), Term::Int(generation)) = (&args[0], &args[1]) else {
                    panic!("bad child term");
                };
                break ThreadId::from_parts(*index as u32, *generation as u64);
            }
        };
        rt.stop_hub(h).unwrap();
        assert!(rt.thread_is_valid(child));
        assert_eq!(rt.live_threads(), 1);
        let client = rt.client();
        client.stop(child).unwrap();
    }

    #[test]
    fn linked_thread_cannot_stop_its_own_hub() {
        let rt = rt(4);
        let h = rt.hub().unwrap();
        rt.spawn_link_fn(h, |ctx| {
            let hub = ctx.linked_hub().unwrap();
            let verdict = match ctx.stop_hub(hub) {
                Err(RuntimeError::SelfHubStop) => "refused",
                other => {
                    log::error!("unexpected {other:?}");
                    "accepted"
                }
            };
            ctx.hub_send(hub, &Term::atom(verdict)).unwrap();
        })
        .unwrap();
        let payload = loop {
            let (_, p) = rt.hub_receive_any(h).unwrap();
            if let Payload::Answer(t) = p {
                break t;
            }
        };
        assert_eq!(payload, Term::atom("refused"));
        rt.stop_hub(h).unwrap();
    }
}
