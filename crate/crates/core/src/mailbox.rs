//! Multi-producer blocking mailboxes with selective receive.
//!
//! Every thread, hub, and external client owns one [`Mailbox`]. Envelopes
//! queue in arrival order; [`Mailbox::receive_from`] dequeues the oldest
//! envelope from one sender and leaves everything else untouched and in
//! order, which is the primitive the whole answer-streaming protocol rests
//! on. Receives block on a condvar and can be interrupted by closing the
//! mailbox or cancelling the waiting thread.

use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use crate::goal::CancelToken;
use crate::runtime::SenderId;
use crate::term::Term;

/// What an envelope carries: one projected solution, or the mark that the
/// sender's stream of answers is over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Answer(Term),
    Done,
}

impl Payload {
    pub fn answer(self) -> Option<Term> {
        match self {
            Payload::Answer(t) => Some(t),
            Payload::Done => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub sender: SenderId,
    pub payload: Payload,
}

/// Why a receive did not return an envelope.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RecvError {
    /// The mailbox was closed; its owner is gone.
    Closed,
    /// The waiting thread was cancelled.
    Cancelled,
}

struct State {
    queue: VecDeque<Envelope>,
    closed: bool,
}

pub struct Mailbox {
    state: Mutex<State>,
    available: Condvar,
}

impl Default for Mailbox {
    fn default() -> Mailbox {
        Mailbox::new()
    }
}

impl Mailbox {
    pub fn new() -> Mailbox {
        Mailbox {
            state: Mutex::new(State {
                queue: VecDeque::new(),
                closed: false,
            }),
            available: Condvar::new(),
        }
    }

    /// Appends an envelope; false if the mailbox has been closed.
    pub fn push(&self, envelope: Envelope) -> bool {
        let mut state = self.state.lock().unwrap();
        if state.closed {
            return false;
        }
        state.queue.push_back(envelope);
        // notify_all: a waiter may be blocked on a specific sender.
        self.available.notify_all();
        true
    }

    /// Appends an envelope unless `cancel` is already set; the check happens
    /// under the queue lock, so a concurrent purge-after-cancel cannot miss
    /// an envelope pushed after it ran.
    pub fn push_cancellable(&self, envelope: Envelope, cancel: &CancelToken) -> bool {
        let mut state = self.state.lock().unwrap();
        if state.closed || cancel.is_cancelled() {
            return false;
        }
        state.queue.push_back(envelope);
        self.available.notify_all();
        true
    }

    /// Closes the mailbox and wakes all waiters; later pushes are refused and
    /// later receives fail with [`RecvError::Closed`].
    pub fn close(&self) {
        let mut state = self.state.lock().unwrap();
        state.closed = true;
        state.queue.clear();
        self.available.notify_all();
    }

    /// Wakes all blocked receivers so they re-check their cancel token.
    pub fn wake_all(&self) {
        let _state = self.state.lock().unwrap();
        self.available.notify_all();
    }

    /// Removes all envelopes from `sender`, returning how many went away.
    pub fn purge_sender(&self, sender: SenderId) -> usize {
        let mut state = self.state.lock().unwrap();
        let before = state.queue.len();
        state.queue.retain(|e| e.sender != sender);
        before - state.queue.len()
    }

    pub fn len(&self) -> usize {
        self.state.lock().unwrap().queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Blocks until any envelope is available and dequeues the oldest.
    pub fn receive_any(&self, cancel: Option<&CancelToken>) -> Result<Envelope, RecvError> {
        self.receive_where(|_| true, cancel, None)
            .map(|e| e.expect("no deadline, so no timeout"))
    }

    /// Blocks until an envelope from `sender` is available and dequeues the
    /// oldest such; envelopes from other senders stay queued in order.
    pub fn receive_from(
        &self,
        sender: SenderId,
        cancel: Option<&CancelToken>,
    ) -> Result<Envelope, RecvError> {
        self.receive_where(|e| e.sender == sender, cancel, None)
            .map(|e| e.expect("no deadline, so no timeout"))
    }

    /// As [`Mailbox::receive_any`] with a timeout; `Ok(None)` on expiry.
    pub fn receive_any_for(
        &self,
        timeout: Duration,
        cancel: Option<&CancelToken>,
    ) -> Result<Option<Envelope>, RecvError> {
        self.receive_where(|_| true, cancel, Some(Instant::now() + timeout))
    }

    /// As [`Mailbox::receive_from`] with a timeout; `Ok(None)` on expiry.
    pub fn receive_from_for(
        &self,
        sender: SenderId,
        timeout: Duration,
        cancel: Option<&CancelToken>,
    ) -> Result<Option<Envelope>, RecvError> {
        self.receive_where(
            |e| e.sender == sender,
            cancel,
            Some(Instant::now() + timeout),
        )
    }

    /// Dequeues the oldest envelope without blocking.
    pub fn try_receive_any(&self) -> Option<Envelope> {
        let mut state = self.state.lock().unwrap();
        state.queue.pop_front()
    }

    fn receive_where(
        &self,
        matches: impl Fn(&Envelope) -> bool,
        cancel: Option<&CancelToken>,
        deadline: Option<Instant>,
    ) -> Result<Option<Envelope>, RecvError> {
        let mut state = self.state.lock().unwrap();
        loop {
            if state.closed {
                return Err(RecvError::Closed);
            }
            if cancel.is_some_and(|c| c.is_cancelled()) {
                return Err(RecvError::Cancelled);
            }
            if let Some(idx) = state.queue.iter().position(&matches) {
                return Ok(state.queue.remove(idx));
            }
            state = match deadline {
                None => self.available.wait(state).unwrap(),
                Some(deadline) => {
                    let now = Instant::now();
                    if now >= deadline {
                        return Ok(None);
                    }
                    let (guard, _) = self.available.wait_timeout(state, deadline - now).unwrap();
                    guard
                }
            };
        }
    }
}
