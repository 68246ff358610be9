#ifndef SOLSTREAM_H
#define SOLSTREAM_H

/* Generated from the solstream-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of an `ss_` call. Values other than `SS_OK` leave every out
// parameter untouched, except `SS_DONE`, which is a successful "no more
// results" signal.
typedef enum {
  SS_OK = 0,
  // Enumeration finished: no (further) solution exists.
  SS_DONE = 1,
  SS_ERR_THREAD_LIMIT = 2,
  SS_ERR_HUB_LIMIT = 3,
  SS_ERR_INVALID_THREAD = 4,
  SS_ERR_INVALID_HUB = 5,
  SS_ERR_SELF_HUB_STOP = 6,
  SS_ERR_NO_DEFAULT_RECIPIENT = 7,
  SS_ERR_CANCELLED = 8,
  SS_ERR_SPAWN_FAILED = 9,
  // The goal engine reported a failure while enumerating.
  SS_ERR_ENGINE = 10,
  // A null pointer, empty array, or out-of-range argument.
  SS_ERR_INVALID_ARGUMENT = 11,
  // A timed receive expired with nothing to deliver.
  SS_TIMEOUT = 12,
} ss_status;

// What a received envelope carried.
typedef enum {
  // A solution term; the answer out parameter is set.
  SS_PAYLOAD_ANSWER = 0,
  // The sender's end-of-solutions marker; the answer stays null.
  SS_PAYLOAD_DONE = 1,
} ss_payload_kind;

// Search strategy for `ss_goal_jug_search`.
typedef enum {
  SS_JUG_BREADTH_FIRST = 0,
  SS_JUG_DEPTH_FIRST = 1,
  SS_JUG_HILL_CLIMBING = 2,
} ss_jug_strategy;

typedef struct ss_client ss_client;

typedef struct ss_goal ss_goal;

typedef struct ss_projection ss_projection;

typedef struct ss_runtime ss_runtime;

typedef struct ss_term ss_term;

// Generation-stamped thread identifier, valid across the ABI by value.
typedef struct {
  uint32_t index;
  uint64_t generation;
} ss_thread_id;

// Generation-stamped hub identifier.
typedef struct {
  uint32_t index;
  uint64_t generation;
} ss_hub_id;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates a runtime with default limits, honoring the MAX_THREADS
// environment variable.
ss_runtime *ss_runtime_new(void);

// Creates a runtime with explicit slot limits. Returns null if either
// limit is zero.
ss_runtime *ss_runtime_with_limits(size_t max_threads, size_t max_hubs);

// # Safety
// `rt` must come from a runtime constructor and not have been freed.
void ss_runtime_free(ss_runtime *rt);

// Number of currently live (running or exhausted-but-unstopped) threads.
//
// # Safety
// `rt` must be a live runtime pointer.
size_t ss_runtime_live_threads(const ss_runtime *rt);

// # Safety
// `rt` must be a live runtime pointer.
size_t ss_runtime_live_hubs(const ss_runtime *rt);

// Opens a mailbox-owning client through which threads are spawned and
// their answers received. Returns null on a null runtime.
//
// # Safety
// `rt` must be a live runtime pointer and must outlive the client.
ss_client *ss_client_new(const ss_runtime *rt);

// Closes the client's mailbox and frees it. Threads it spawned keep
// running; stop them first if that matters.
//
// # Safety
// `client` must come from `ss_client_new` and not have been freed.
void ss_client_free(ss_client *client);

// Spawns a thread enumerating `goal`, streaming each solution to this
// client as an answer envelope shaped by `projection`, then one done
// envelope. Writes the new thread's id to `out`.
//
// # Safety
// All pointers must be live; `out` must point to writable memory.
ss_status ss_client_spawn(const ss_client *client,
                          const ss_projection *projection,
                          const ss_goal *goal,
                          ss_thread_id *out);

// Sends a term to a thread as an answer envelope.
//
// # Safety
// `client` and `t` must be live pointers.
ss_status ss_client_send(const ss_client *client, ss_thread_id target, const ss_term *t);

// Blocks until any envelope arrives. On SS_OK fills `sender` (when non
// null) and `kind`; an answer payload is written to `answer`, owned by
// the caller.
//
// # Safety
// `client` must be live; `kind` and `answer` must be writable.
ss_status ss_client_receive_any(const ss_client *client,
                                ss_thread_id *sender,
                                ss_payload_kind *kind,
                                ss_term **answer);

// As `ss_client_receive_any` with a timeout; SS_TIMEOUT when it expires.
//
// # Safety
// As `ss_client_receive_any`.
ss_status ss_client_receive_any_for(const ss_client *client,
                                    uint64_t timeout_ms,
                                    ss_thread_id *sender,
                                    ss_payload_kind *kind,
                                    ss_term **answer);

// Blocks until the oldest envelope from `sender` arrives, leaving other
// senders' envelopes queued in order.
//
// # Safety
// As `ss_client_receive_any`.
ss_status ss_client_receive_from(const ss_client *client,
                                 ss_thread_id sender,
                                 ss_payload_kind *kind,
                                 ss_term **answer);

// Stops a thread: cancels it, purges its unread envelopes from this
// client's mailbox, and frees its identifier for reuse.
//
// # Safety
// `client` must be live.
ss_status ss_client_stop(const ss_client *client, ss_thread_id target);

// Creates a hub mailbox, writing its id to `out`.
//
// # Safety
// `rt` must be live; `out` writable.
ss_status ss_hub_new(const ss_runtime *rt, ss_hub_id *out);

// Spawns a goal thread linked to `hub`: its answers and done marker go to
// the hub, and stopping the hub stops it.
//
// # Safety
// All pointers must be live; `out` writable.
ss_status ss_hub_spawn_link(const ss_runtime *rt,
                            ss_hub_id hub,
                            const ss_projection *projection,
                            const ss_goal *goal,
                            ss_thread_id *out);

// Sends a term to a hub as an answer envelope from this client.
//
// # Safety
// `client` and `t` must be live pointers.
ss_status ss_hub_send(const ss_client *client, ss_hub_id hub, const ss_term *t);

// Blocks until any envelope reaches the hub.
//
// # Safety
// As `ss_client_receive_any`.
ss_status ss_hub_receive_any(const ss_client *client,
                             ss_hub_id hub,
                             ss_thread_id *sender,
                             ss_payload_kind *kind,
                             ss_term **answer);

// Stops the hub: cancels and joins every linked thread, then frees the
// hub id. Returns only after all linked threads are gone.
//
// # Safety
// `rt` must be live.
ss_status ss_hub_stop(const ss_runtime *rt, ss_hub_id hub);

// Interned atom term. Returns null on null or non-UTF-8 input.
//
// # Safety
// `name` must be a valid NUL-terminated string.
ss_term *ss_term_atom(const char *name);

ss_term *ss_term_int(int64_t value);

ss_term *ss_term_var(size_t index);

// List term over `len` borrowed items (cloned in; the caller keeps
// ownership of the inputs). Null if the array or any element is null.
//
// # Safety
// `items` must point to `len` valid term pointers (or be null with len 0).
ss_term *ss_term_list(const ss_term *const *items, size_t len);

// Compound term `functor(args...)` over borrowed arguments.
//
// # Safety
// `functor` must be a valid NUL-terminated string; `args` as in
// `ss_term_list`.
ss_term *ss_term_compound(const char *functor, const ss_term *const *args, size_t len);

// # Safety
// `t` must be a live term pointer.
ss_term *ss_term_clone(const ss_term *t);

// Structural equality.
//
// # Safety
// Both pointers must be live.
bool ss_term_eq(const ss_term *a, const ss_term *b);

// Canonical rendering (`f(a, [1,2], _G0)`), as a NUL-terminated string
// to release with `ss_string_free`. Null on a null term.
//
// # Safety
// `t` must be a live term pointer.
char *ss_term_to_string(const ss_term *t);

// # Safety
// `s` must come from `ss_term_to_string` and not have been freed.
void ss_string_free(char *s);

// # Safety
// `t` must come from a term constructor and not have been freed.
void ss_term_free(ss_term *t);

ss_goal *ss_goal_succeed(void);

ss_goal *ss_goal_fail(void);

// Unifies variable slot `slot` with a copy of `t`; at most one solution.
//
// # Safety
// `t` must be a live term pointer.
ss_goal *ss_goal_succeed_with(size_t slot, const ss_term *t);

// Enumerates the elements of list term `items` into slot `slot`.
//
// # Safety
// `items` must be a live term pointer.
ss_goal *ss_goal_member(size_t slot, const ss_term *items);

// Enumerates the integers `lo..=hi` into slot `slot`.
ss_goal *ss_goal_between(size_t slot, int64_t lo, int64_t hi);

// Enumerates `lo, lo+1, ...` without an upper bound.
ss_goal *ss_goal_between_unbounded(size_t slot, int64_t lo);

// # Safety
// Both goals must be live pointers; they are cloned in.
ss_goal *ss_goal_conj(const ss_goal *a, const ss_goal *b);

// # Safety
// Both goals must be live pointers; they are cloned in.
ss_goal *ss_goal_disj(const ss_goal *a, const ss_goal *b);

// Binds slot 0 to the move count of an n-ring Hanoi solve.
ss_goal *ss_goal_hanoi_moves(uint32_t rings);

// Binds slot 0 to the n-th Fibonacci number, computed naively.
ss_goal *ss_goal_fib_naive(uint32_t n);

// Binds slot 0 to a jug-measuring plan reaching `target`, or fails if
// unreachable.
//
// # Safety
// `capacities` must point to `ncaps` integers, `ncaps >= 1`.
ss_goal *ss_goal_jug_search(const int64_t *capacities,
                            size_t ncaps,
                            int64_t target,
                            ss_jug_strategy strategy);

// # Safety
// `g` must come from a goal constructor and not have been freed.
void ss_goal_free(ss_goal *g);

// Answer pattern: a term whose `_Gi` variables are filled from each
// solution's slot `i`.
//
// # Safety
// `pattern` must be a live term pointer.
ss_projection *ss_projection_new(const ss_term *pattern);

// # Safety
// `p` must come from `ss_projection_new` and not have been freed.
void ss_projection_free(ss_projection *p);

// Races the goals in parallel; the first solution wins and every racer is
// stopped before returning. SS_OK writes the projected winner to
// `winner`; SS_DONE means every goal ran out without a solution.
//
// # Safety
// Pointers must be live; `goals` must hold `ngoals >= 1` entries;
// `winner` must be writable.
ss_status ss_first_solution(const ss_runtime *rt,
                            const ss_projection *projection,
                            const ss_goal *const *goals,
                            size_t ngoals,
                            ss_term **winner);

// Runs independent goals in parallel, one thread each. SS_OK writes a
// list term of the projected first solutions, in goal order, to
// `results`; SS_DONE means some goal had no solution.
//
// # Safety
// As `ss_first_solution`, with `projections` also holding `ngoals`
// entries.
ss_status ss_concurrent_and(const ss_runtime *rt,
                            const ss_projection *const *projections,
                            const ss_goal *const *goals,
                            size_t ngoals,
                            ss_term **results);

// Runs the conjunction `goals[0], ..., goals[n-1]` as a pipeline over
// `nvars` variable slots and writes a list term of every projected
// solution, in sequential order, to `results`. The pipe is stopped before
// returning.
//
// # Safety
// As `ss_first_solution`; every goal's arity and the projection's
// variables must fit in `nvars`.
ss_status ss_piped_findall(const ss_runtime *rt,
                           const ss_projection *projection,
                           const ss_goal *const *goals,
                           size_t ngoals,
                           size_t nvars,
                           ss_term **results);

// Single-threaded reference enumeration of the same conjunction; writes a
// list term of every projected solution to `results`.
//
// # Safety
// As `ss_piped_findall`, minus the runtime.
ss_status ss_seq_findall(const ss_projection *projection,
                         const ss_goal *const *goals,
                         size_t ngoals,
                         size_t nvars,
                         ss_term **results);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOLSTREAM_H */
