//! C ABI over the solstream runtime: opaque handles for runtimes, clients,
//! terms, goals, and projections; by-value thread and hub identifiers; and
//! status codes instead of Results. Every object returned by an `ss_*_new`
//! or constructor function is owned by the caller and released with the
//! matching `ss_*_free`. Pointer arguments are borrowed unless documented
//! otherwise. The generated header lands in `include/solstream.h`.

#![allow(non_camel_case_types)]

use solstream::puzzles::JugStrategy;
use solstream::{
    concurrent_and, first_solution, pipeline, AnswerProjection, Client, Goal, HubId, Payload,
    Runtime, RuntimeConfig, RuntimeError, SenderId, Term, ThreadId,
};
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Duration;

pub struct ss_runtime(Runtime);
pub struct ss_client(Client);
pub struct ss_term(Term);
pub struct ss_goal(Goal);
pub struct ss_projection(AnswerProjection);

/// Outcome of an `ss_` call. Values other than `SS_OK` leave every out
/// parameter untouched, except `SS_DONE`, which is a successful "no more
/// results" signal.
#[repr(C)]
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum ss_status {
    SS_OK = 0,
    /// Enumeration finished: no (further) solution exists.
    SS_DONE = 1,
    SS_ERR_THREAD_LIMIT = 2,
    SS_ERR_HUB_LIMIT = 3,
    SS_ERR_INVALID_THREAD = 4,
    SS_ERR_INVALID_HUB = 5,
    SS_ERR_SELF_HUB_STOP = 6,
    SS_ERR_NO_DEFAULT_RECIPIENT = 7,
    SS_ERR_CANCELLED = 8,
    SS_ERR_SPAWN_FAILED = 9,
    /// The goal engine reported a failure while enumerating.
    SS_ERR_ENGINE = 10,
    /// A null pointer, empty array, or out-of-range argument.
    SS_ERR_INVALID_ARGUMENT = 11,
    /// A timed receive expired with nothing to deliver.
    SS_TIMEOUT = 12,
}

/// Generation-stamped thread identifier, valid across the ABI by value.
#[repr(C)]
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub struct ss_thread_id {
    pub index: u32,
    pub generation: u64,
}

/// Generation-stamped hub identifier.
#[repr(C)]
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub struct ss_hub_id {
    pub index: u32,
    pub generation: u64,
}

/// What a received envelope carried.
#[repr(C)]
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum ss_payload_kind {
    /// A solution term; the answer out parameter is set.
    SS_PAYLOAD_ANSWER = 0,
    /// The sender's end-of-solutions marker; the answer stays null.
    SS_PAYLOAD_DONE = 1,
}

/// Search strategy for `ss_goal_jug_search`.
#[repr(C)]
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum ss_jug_strategy {
    SS_JUG_BREADTH_FIRST = 0,
    SS_JUG_DEPTH_FIRST = 1,
    SS_JUG_HILL_CLIMBING = 2,
}

fn status_of(e: &RuntimeError) -> ss_status {
    match e {
        RuntimeError::ThreadLimitExhausted(_) => ss_status::SS_ERR_THREAD_LIMIT,
        RuntimeError::HubLimitExhausted(_) => ss_status::SS_ERR_HUB_LIMIT,
        RuntimeError::InvalidThread => ss_status::SS_ERR_INVALID_THREAD,
        RuntimeError::InvalidHub => ss_status::SS_ERR_INVALID_HUB,
        RuntimeError::SelfHubStop => ss_status::SS_ERR_SELF_HUB_STOP,
        RuntimeError::NoDefaultRecipient => ss_status::SS_ERR_NO_DEFAULT_RECIPIENT,
        RuntimeError::Cancelled => ss_status::SS_ERR_CANCELLED,
        RuntimeError::SpawnFailed(_) => ss_status::SS_ERR_SPAWN_FAILED,
    }
}

fn thread_in(id: ss_thread_id) -> ThreadId {
    ThreadId::from_parts(id.index, id.generation)
}

fn thread_out(id: ThreadId) -> ss_thread_id {
    ss_thread_id {
        index: id.index(),
        generation: id.generation(),
    }
}

fn hub_in(id: ss_hub_id) -> HubId {
    HubId::from_parts(id.index, id.generation)
}

fn hub_out(id: HubId) -> ss_hub_id {
    ss_hub_id {
        index: id.index(),
        generation: id.generation(),
    }
}

unsafe fn slice_in<'a, T>(ptr: *const *const T, len: usize) -> Option<Vec<&'a T>> {
    if ptr.is_null() {
        return None;
    }
    let raw = std::slice::from_raw_parts(ptr, len);
    raw.iter().map(|p| p.as_ref()).collect()
}

fn term_out(out: *mut *mut ss_term, t: Term) {
    unsafe { *out = Box::into_raw(Box::new(ss_term(t))) };
}

fn deliver(
    sender: Option<SenderId>,
    payload: Payload,
    sender_out: *mut ss_thread_id,
    kind_out: *mut ss_payload_kind,
    answer_out: *mut *mut ss_term,
) -> ss_status {
    if let Some(s) = sender {
        let SenderId::Thread(id) = s else {
            // Client mailboxes only hear from threads; anything else means
            // the embedding drove the API outside its contract.
            return ss_status::SS_ERR_ENGINE;
        };
        if !sender_out.is_null() {
            unsafe { *sender_out = thread_out(id) };
        }
    }
    match payload {
        Payload::Answer(t) => {
            unsafe { *kind_out = ss_payload_kind::SS_PAYLOAD_ANSWER };
            term_out(answer_out, t);
        }
        Payload::Done => {
            unsafe { *kind_out = ss_payload_kind::SS_PAYLOAD_DONE };
        }
    }
    ss_status::SS_OK
}

/// Creates a runtime with default limits, honoring the MAX_THREADS
/// environment variable.
#[no_mangle]
pub extern "C" fn ss_runtime_new() -> *mut ss_runtime {
    Box::into_raw(Box::new(ss_runtime(Runtime::with_config(
        RuntimeConfig::from_env(),
    ))))
}

/// Creates a runtime with explicit slot limits. Returns null if either
/// limit is zero.
#[no_mangle]
pub extern "C" fn ss_runtime_with_limits(max_threads: usize, max_hubs: usize) -> *mut ss_runtime {
    if max_threads == 0 || max_hubs == 0 {
        return std::ptr::null_mut();
    }
    Box::into_raw(Box::new(ss_runtime(Runtime::with_config(RuntimeConfig {
        max_threads,
        max_hubs,
    }))))
}

/// # Safety
/// `rt` must come from a runtime constructor and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ss_runtime_free(rt: *mut ss_runtime) {
    if !rt.is_null() {
        drop(Box::from_raw(rt));
    }
}

/// Number of currently live (running or exhausted-but-unstopped) threads.
///
/// # Safety
/// `rt` must be a live runtime pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_runtime_live_threads(rt: *const ss_runtime) -> usize {
    rt.as_ref().map_or(0, |r| r.0.live_threads())
}

/// # Safety
/// `rt` must be a live runtime pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_runtime_live_hubs(rt: *const ss_runtime) -> usize {
    rt.as_ref().map_or(0, |r| r.0.live_hubs())
}

/// Opens a mailbox-owning client through which threads are spawned and
/// their answers received. Returns null on a null runtime.
///
/// # Safety
/// `rt` must be a live runtime pointer and must outlive the client.
#[no_mangle]
pub unsafe extern "C" fn ss_client_new(rt: *const ss_runtime) -> *mut ss_client {
    match rt.as_ref() {
        Some(r) => Box::into_raw(Box::new(ss_client(r.0.client()))),
        None => std::ptr::null_mut(),
    }
}

/// Closes the client's mailbox and frees it. Threads it spawned keep
/// running; stop them first if that matters.
///
/// # Safety
/// `client` must come from `ss_client_new` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ss_client_free(client: *mut ss_client) {
    if !client.is_null() {
        drop(Box::from_raw(client));
    }
}

/// Spawns a thread enumerating `goal`, streaming each solution to this
/// client as an answer envelope shaped by `projection`, then one done
/// envelope. Writes the new thread's id to `out`.
///
/// # Safety
/// All pointers must be live; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn ss_client_spawn(
    client: *const ss_client,
    projection: *const ss_projection,
    goal: *const ss_goal,
    out: *mut ss_thread_id,
) -> ss_status {
    let (Some(c), Some(p), Some(g)) = (client.as_ref(), projection.as_ref(), goal.as_ref()) else {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    };
    if out.is_null() {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    }
    match c.0.spawn(&p.0, &g.0) {
        Ok(id) => {
            *out = thread_out(id);
            ss_status::SS_OK
        }
        Err(e) => status_of(&e),
    }
}

/// Sends a term to a thread as an answer envelope.
///
/// # Safety
/// `client` and `t` must be live pointers.
#[no_mangle]
pub unsafe extern "C" fn ss_client_send(
    client: *const ss_client,
    target: ss_thread_id,
    t: *const ss_term,
) -> ss_status {
    let (Some(c), Some(t)) = (client.as_ref(), t.as_ref()) else {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    };
    match c.0.send(thread_in(target), &t.0) {
        Ok(()) => ss_status::SS_OK,
        Err(e) => status_of(&e),
    }
}

/// Blocks until any envelope arrives. On SS_OK fills `sender` (when non
/// null) and `kind`; an answer payload is written to `answer`, owned by
/// the caller.
///
/// # Safety
/// `client` must be live; `kind` and `answer` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_client_receive_any(
    client: *const ss_client,
    sender: *mut ss_thread_id,
    kind: *mut ss_payload_kind,
    answer: *mut *mut ss_term,
) -> ss_status {
    let Some(c) = client.as_ref() else {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    };
    if kind.is_null() || answer.is_null() {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    }
    let (s, payload) = c.0.receive_any();
    deliver(Some(s), payload, sender, kind, answer)
}

/// As `ss_client_receive_any` with a timeout; SS_TIMEOUT when it expires.
///
/// # Safety
/// As `ss_client_receive_any`.
#[no_mangle]
pub unsafe extern "C" fn ss_client_receive_any_for(
    client: *const ss_client,
    timeout_ms: u64,
    sender: *mut ss_thread_id,
    kind: *mut ss_payload_kind,
    answer: *mut *mut ss_term,
) -> ss_status {
    let Some(c) = client.as_ref() else {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    };
    if kind.is_null() || answer.is_null() {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    }
    match c.0.receive_any_for(Duration::from_millis(timeout_ms)) {
        Some((s, payload)) => deliver(Some(s), payload, sender, kind, answer),
        None => ss_status::SS_TIMEOUT,
    }
}

/// Blocks until the oldest envelope from `sender` arrives, leaving other
/// senders' envelopes queued in order.
///
/// # Safety
/// As `ss_client_receive_any`.
#[no_mangle]
pub unsafe extern "C" fn ss_client_receive_from(
    client: *const ss_client,
    sender: ss_thread_id,
    kind: *mut ss_payload_kind,
    answer: *mut *mut ss_term,
) -> ss_status {
    let Some(c) = client.as_ref() else {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    };
    if kind.is_null() || answer.is_null() {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    }
    match c.0.receive_from(thread_in(sender)) {
        Ok(payload) => deliver(None, payload, std::ptr::null_mut(), kind, answer),
        Err(e) => status_of(&e),
    }
}

/// Stops a thread: cancels it, purges its unread envelopes from this
/// client's mailbox, and frees its identifier for reuse.
///
/// # Safety
/// `client` must be live.
#[no_mangle]
pub unsafe extern "C" fn ss_client_stop(
    client: *const ss_client,
    target: ss_thread_id,
) -> ss_status {
    let Some(c) = client.as_ref() else {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    };
    match c.0.stop(thread_in(target)) {
        Ok(()) => ss_status::SS_OK,
        Err(e) => status_of(&e),
    }
}

/// Creates a hub mailbox, writing its id to `out`.
///
/// # Safety
/// `rt` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_hub_new(rt: *const ss_runtime, out: *mut ss_hub_id) -> ss_status {
    let Some(r) = rt.as_ref() else {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    };
    if out.is_null() {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    }
    match r.0.hub() {
        Ok(h) => {
            *out = hub_out(h);
            ss_status::SS_OK
        }
        Err(e) => status_of(&e),
    }
}

/// Spawns a goal thread linked to `hub`: its answers and done marker go to
/// the hub, and stopping the hub stops it.
///
/// # Safety
/// All pointers must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_hub_spawn_link(
    rt: *const ss_runtime,
    hub: ss_hub_id,
    projection: *const ss_projection,
    goal: *const ss_goal,
    out: *mut ss_thread_id,
) -> ss_status {
    let (Some(r), Some(p), Some(g)) = (rt.as_ref(), projection.as_ref(), goal.as_ref()) else {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    };
    if out.is_null() {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    }
    match r.0.spawn_link(hub_in(hub), &p.0, &g.0) {
        Ok(id) => {
            *out = thread_out(id);
            ss_status::SS_OK
        }
        Err(e) => status_of(&e),
    }
}

/// Sends a term to a hub as an answer envelope from this client.
///
/// # Safety
/// `client` and `t` must be live pointers.
#[no_mangle]
pub unsafe extern "C" fn ss_hub_send(
    client: *const ss_client,
    hub: ss_hub_id,
    t: *const ss_term,
) -> ss_status {
    let (Some(c), Some(t)) = (client.as_ref(), t.as_ref()) else {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    };
    match c.0.hub_send(hub_in(hub), &t.0) {
        Ok(()) => ss_status::SS_OK,
        Err(e) => status_of(&e),
    }
}

/// Blocks until any envelope reaches the hub.
///
/// # Safety
/// As `ss_client_receive_any`.
#[no_mangle]
pub unsafe extern "C" fn ss_hub_receive_any(
    client: *const ss_client,
    hub: ss_hub_id,
    sender: *mut ss_thread_id,
    kind: *mut ss_payload_kind,
    answer: *mut *mut ss_term,
) -> ss_status {
    let Some(c) = client.as_ref() else {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    };
    if kind.is_null() || answer.is_null() {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    }
    match c.0.hub_receive_any(hub_in(hub)) {
        Ok((s, payload)) => deliver(Some(s), payload, sender, kind, answer),
        Err(e) => status_of(&e),
    }
}

/// Stops the hub: cancels and joins every linked thread, then frees the
/// hub id. Returns only after all linked threads are gone.
///
/// # Safety
/// `rt` must be live.
#[no_mangle]
pub unsafe extern "C" fn ss_hub_stop(rt: *const ss_runtime, hub: ss_hub_id) -> ss_status {
    let Some(r) = rt.as_ref() else {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    };
    match r.0.stop_hub(hub_in(hub)) {
        Ok(()) => ss_status::SS_OK,
        Err(e) => status_of(&e),
    }
}

/// Interned atom term. Returns null on null or non-UTF-8 input.
///
/// # Safety
/// `name` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ss_term_atom(name: *const c_char) -> *mut ss_term {
    if name.is_null() {
        return std::ptr::null_mut();
    }
    match CStr::from_ptr(name).to_str() {
        Ok(s) => Box::into_raw(Box::new(ss_term(Term::atom(s)))),
        Err(_) => std::ptr::null_mut(),
    }
}

#[no_mangle]
pub extern "C" fn ss_term_int(value: i64) -> *mut ss_term {
    Box::into_raw(Box::new(ss_term(Term::int(value))))
}

#[no_mangle]
pub extern "C" fn ss_term_var(index: usize) -> *mut ss_term {
    Box::into_raw(Box::new(ss_term(Term::var(index))))
}

/// List term over `len` borrowed items (cloned in; the caller keeps
/// ownership of the inputs). Null if the array or any element is null.
///
/// # Safety
/// `items` must point to `len` valid term pointers (or be null with len 0).
#[no_mangle]
pub unsafe extern "C" fn ss_term_list(items: *const *const ss_term, len: usize) -> *mut ss_term {
    if len == 0 {
        return Box::into_raw(Box::new(ss_term(Term::list(Vec::new()))));
    }
    match slice_in(items, len) {
        Some(items) => Box::into_raw(Box::new(ss_term(Term::list(
            items.iter().map(|t| t.0.clone()).collect(),
        )))),
        None => std::ptr::null_mut(),
    }
}

/// Compound term `functor(args...)` over borrowed arguments.
///
/// # Safety
/// `functor` must be a valid NUL-terminated string; `args` as in
/// `ss_term_list`.
#[no_mangle]
pub unsafe extern "C" fn ss_term_compound(
    functor: *const c_char,
    args: *const *const ss_term,
    len: usize,
) -> *mut ss_term {
    if functor.is_null() {
        return std::ptr::null_mut();
    }
    let Ok(name) = CStr::from_ptr(functor).to_str() else {
        return std::ptr::null_mut();
    };
    let args = if len == 0 {
        Vec::new()
    } else {
        match slice_in(args, len) {
            Some(args) => args.iter().map(|t| t.0.clone()).collect(),
            None => return std::ptr::null_mut(),
        }
    };
    Box::into_raw(Box::new(ss_term(Term::compound(name, args))))
}

/// # Safety
/// `t` must be a live term pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_term_clone(t: *const ss_term) -> *mut ss_term {
    match t.as_ref() {
        Some(t) => Box::into_raw(Box::new(ss_term(t.0.clone()))),
        None => std::ptr::null_mut(),
    }
}

/// Structural equality.
///
/// # Safety
/// Both pointers must be live.
#[no_mangle]
pub unsafe extern "C" fn ss_term_eq(a: *const ss_term, b: *const ss_term) -> bool {
    match (a.as_ref(), b.as_ref()) {
        (Some(a), Some(b)) => a.0 == b.0,
        _ => false,
    }
}

/// Canonical rendering (`f(a, [1,2], _G0)`), as a NUL-terminated string
/// to release with `ss_string_free`. Null on a null term.
///
/// # Safety
/// `t` must be a live term pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_term_to_string(t: *const ss_term) -> *mut c_char {
    match t.as_ref() {
        Some(t) => CString::new(t.0.to_string())
            .map(CString::into_raw)
            .unwrap_or(std::ptr::null_mut()),
        None => std::ptr::null_mut(),
    }
}

/// # Safety
/// `s` must come from `ss_term_to_string` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ss_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `t` must come from a term constructor and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ss_term_free(t: *mut ss_term) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

#[no_mangle]
pub extern "C" fn ss_goal_succeed() -> *mut ss_goal {
    Box::into_raw(Box::new(ss_goal(Goal::succeed())))
}

#[no_mangle]
pub extern "C" fn ss_goal_fail() -> *mut ss_goal {
    Box::into_raw(Box::new(ss_goal(Goal::fail_goal())))
}

/// Unifies variable slot `slot` with a copy of `t`; at most one solution.
///
/// # Safety
/// `t` must be a live term pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_goal_succeed_with(slot: usize, t: *const ss_term) -> *mut ss_goal {
    match t.as_ref() {
        Some(t) => Box::into_raw(Box::new(ss_goal(Goal::succeed_with(slot, t.0.clone())))),
        None => std::ptr::null_mut(),
    }
}

/// Enumerates the elements of list term `items` into slot `slot`.
///
/// # Safety
/// `items` must be a live term pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_goal_member(slot: usize, items: *const ss_term) -> *mut ss_goal {
    match items.as_ref() {
        Some(t) => Box::into_raw(Box::new(ss_goal(Goal::member(slot, t.0.clone())))),
        None => std::ptr::null_mut(),
    }
}

/// Enumerates the integers `lo..=hi` into slot `slot`.
#[no_mangle]
pub extern "C" fn ss_goal_between(slot: usize, lo: i64, hi: i64) -> *mut ss_goal {
    Box::into_raw(Box::new(ss_goal(Goal::between(slot, lo, Some(hi)))))
}

/// Enumerates `lo, lo+1, ...` without an upper bound.
#[no_mangle]
pub extern "C" fn ss_goal_between_unbounded(slot: usize, lo: i64) -> *mut ss_goal {
    Box::into_raw(Box::new(ss_goal(Goal::between(slot, lo, None))))
}

/// # Safety
/// Both goals must be live pointers; they are cloned in.
#[no_mangle]
pub unsafe extern "C" fn ss_goal_conj(a: *const ss_goal, b: *const ss_goal) -> *mut ss_goal {
    match (a.as_ref(), b.as_ref()) {
        (Some(a), Some(b)) => {
            Box::into_raw(Box::new(ss_goal(Goal::conj(a.0.clone(), b.0.clone()))))
        }
        _ => std::ptr::null_mut(),
    }
}

/// # Safety
/// Both goals must be live pointers; they are cloned in.
#[no_mangle]
pub unsafe extern "C" fn ss_goal_disj(a: *const ss_goal, b: *const ss_goal) -> *mut ss_goal {
    match (a.as_ref(), b.as_ref()) {
        (Some(a), Some(b)) => {
            Box::into_raw(Box::new(ss_goal(Goal::disj(a.0.clone(), b.0.clone()))))
        }
        _ => std::ptr::null_mut(),
    }
}

/// Binds slot 0 to the move count of an n-ring Hanoi solve.
#[no_mangle]
pub extern "C" fn ss_goal_hanoi_moves(rings: u32) -> *mut ss_goal {
    Box::into_raw(Box::new(ss_goal(Goal::hanoi_moves(rings))))
}

/// Binds slot 0 to the n-th Fibonacci number, computed naively.
#[no_mangle]
pub extern "C" fn ss_goal_fib_naive(n: u32) -> *mut ss_goal {
    Box::into_raw(Box::new(ss_goal(Goal::fib_naive(n))))
}

/// Binds slot 0 to a jug-measuring plan reaching `target`, or fails if
/// unreachable.
///
/// # Safety
/// `capacities` must point to `ncaps` integers, `ncaps >= 1`.
#[no_mangle]
pub unsafe extern "C" fn ss_goal_jug_search(
    capacities: *const i64,
    ncaps: usize,
    target: i64,
    strategy: ss_jug_strategy,
) -> *mut ss_goal {
    if capacities.is_null() || ncaps == 0 {
        return std::ptr::null_mut();
    }
    let caps = std::slice::from_raw_parts(capacities, ncaps).to_vec();
    let strategy = match strategy {
        ss_jug_strategy::SS_JUG_BREADTH_FIRST => JugStrategy::BreadthFirst,
        ss_jug_strategy::SS_JUG_DEPTH_FIRST => JugStrategy::DepthFirst,
        ss_jug_strategy::SS_JUG_HILL_CLIMBING => JugStrategy::HillClimbing,
    };
    Box::into_raw(Box::new(ss_goal(Goal::jug_search(caps, target, strategy))))
}

/// # Safety
/// `g` must come from a goal constructor and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ss_goal_free(g: *mut ss_goal) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Answer pattern: a term whose `_Gi` variables are filled from each
/// solution's slot `i`.
///
/// # Safety
/// `pattern` must be a live term pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_projection_new(pattern: *const ss_term) -> *mut ss_projection {
    match pattern.as_ref() {
        Some(t) => Box::into_raw(Box::new(ss_projection(AnswerProjection::new(t.0.clone())))),
        None => std::ptr::null_mut(),
    }
}

/// # Safety
/// `p` must come from `ss_projection_new` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ss_projection_free(p: *mut ss_projection) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn projection_fits(p: &AnswerProjection, nvars: usize) -> bool {
    p.max_var().is_none_or(|v| v < nvars)
}

/// Races the goals in parallel; the first solution wins and every racer is
/// stopped before returning. SS_OK writes the projected winner to
/// `winner`; SS_DONE means every goal ran out without a solution.
///
/// # Safety
/// Pointers must be live; `goals` must hold `ngoals >= 1` entries;
/// `winner` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_first_solution(
    rt: *const ss_runtime,
    projection: *const ss_projection,
    goals: *const *const ss_goal,
    ngoals: usize,
    winner: *mut *mut ss_term,
) -> ss_status {
    let (Some(r), Some(p)) = (rt.as_ref(), projection.as_ref()) else {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    };
    if ngoals == 0 || winner.is_null() {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    }
    let Some(goals) = slice_in(goals, ngoals) else {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    };
    let goals: Vec<Goal> = goals.iter().map(|g| g.0.clone()).collect();
    let outcome = catch_unwind(AssertUnwindSafe(|| first_solution(&r.0, &p.0, &goals)));
    match outcome {
        Ok(Ok(Some(t))) => {
            term_out(winner, t);
            ss_status::SS_OK
        }
        Ok(Ok(None)) => ss_status::SS_DONE,
        Ok(Err(e)) => status_of(&e),
        Err(_) => ss_status::SS_ERR_ENGINE,
    }
}

/// Runs independent goals in parallel, one thread each. SS_OK writes a
/// list term of the projected first solutions, in goal order, to
/// `results`; SS_DONE means some goal had no solution.
///
/// # Safety
/// As `ss_first_solution`, with `projections` also holding `ngoals`
/// entries.
#[no_mangle]
pub unsafe extern "C" fn ss_concurrent_and(
    rt: *const ss_runtime,
    projections: *const *const ss_projection,
    goals: *const *const ss_goal,
    ngoals: usize,
    results: *mut *mut ss_term,
) -> ss_status {
    let Some(r) = rt.as_ref() else {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    };
    if ngoals == 0 || results.is_null() {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    }
    let (Some(ps), Some(gs)) = (slice_in(projections, ngoals), slice_in(goals, ngoals)) else {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    };
    let ps: Vec<AnswerProjection> = ps.iter().map(|p| p.0.clone()).collect();
    let gs: Vec<Goal> = gs.iter().map(|g| g.0.clone()).collect();
    let outcome = catch_unwind(AssertUnwindSafe(|| concurrent_and(&r.0, &ps, &gs)));
    match outcome {
        Ok(Ok(Some(ts))) => {
            term_out(results, Term::list(ts));
            ss_status::SS_OK
        }
        Ok(Ok(None)) => ss_status::SS_DONE,
        Ok(Err(e)) => status_of(&e),
        Err(_) => ss_status::SS_ERR_ENGINE,
    }
}

/// Runs the conjunction `goals[0], ..., goals[n-1]` as a pipeline over
/// `nvars` variable slots and writes a list term of every projected
/// solution, in sequential order, to `results`. The pipe is stopped before
/// returning.
///
/// # Safety
/// As `ss_first_solution`; every goal's arity and the projection's
/// variables must fit in `nvars`.
#[no_mangle]
pub unsafe extern "C" fn ss_piped_findall(
    rt: *const ss_runtime,
    projection: *const ss_projection,
    goals: *const *const ss_goal,
    ngoals: usize,
    nvars: usize,
    results: *mut *mut ss_term,
) -> ss_status {
    let (Some(r), Some(p)) = (rt.as_ref(), projection.as_ref()) else {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    };
    if ngoals == 0 || results.is_null() {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    }
    let Some(goals) = slice_in(goals, ngoals) else {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    };
    let goals: Vec<Goal> = goals.iter().map(|g| g.0.clone()).collect();
    if !projection_fits(&p.0, nvars) || goals.iter().any(|g| g.arity() > nvars) {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    }
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        pipeline::piped_findall(&r.0, &p.0, &goals, nvars)
    }));
    match outcome {
        Ok(Ok(ts)) => {
            term_out(results, Term::list(ts));
            ss_status::SS_OK
        }
        Ok(Err(e)) => status_of(&e),
        Err(_) => ss_status::SS_ERR_ENGINE,
    }
}

/// Single-threaded reference enumeration of the same conjunction; writes a
/// list term of every projected solution to `results`.
///
/// # Safety
/// As `ss_piped_findall`, minus the runtime.
#[no_mangle]
pub unsafe extern "C" fn ss_seq_findall(
    projection: *const ss_projection,
    goals: *const *const ss_goal,
    ngoals: usize,
    nvars: usize,
    results: *mut *mut ss_term,
) -> ss_status {
    let Some(p) = projection.as_ref() else {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    };
    if ngoals == 0 || results.is_null() {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    }
    let Some(goals) = slice_in(goals, ngoals) else {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    };
    let goals: Vec<Goal> = goals.iter().map(|g| g.0.clone()).collect();
    if !projection_fits(&p.0, nvars) || goals.iter().any(|g| g.arity() > nvars) {
        return ss_status::SS_ERR_INVALID_ARGUMENT;
    }
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        pipeline::seq_findall(&p.0, &goals, nvars)
    }));
    match outcome {
        Ok(Ok(ts)) => {
            term_out(results, Term::list(ts));
            ss_status::SS_OK
        }
        Ok(Err(_)) => ss_status::SS_ERR_ENGINE,
        Err(_) => ss_status::SS_ERR_ENGINE,
    }
}
