//! Competitive and independent parallel execution of goals.
//!
//! Both combinators here are semideterministic: they return at most one
//! result and tear their workers down before returning. Each call builds its
//! own private hub or client, so concurrent calls never share a mailbox.

use crate::goal::Goal;
use crate::mailbox::Payload;
use crate::runtime::{Client, Runtime, RuntimeError, ThreadId};
use crate::term::{AnswerProjection, Term};

/// Races `goals` against each other and returns the first answer any of them
/// produces; the losers are stopped and joined before this returns. `None`
/// means every goal terminated without an answer.
pub fn first_solution(
    rt: &Runtime,
    projection: &AnswerProjection,
    goals: &[Goal],
) -> Result<Option<Term>, RuntimeError> {
    assert!(!goals.is_empty(), "first_solution needs at least one goal");
    let h = rt.hub()?;
    for goal in goals {
        if let Err(e) = rt.spawn_link(h, projection, goal) {
            let _ = rt.stop_hub(h);
            return Err(e);
        }
    }
    let mut exhausted = 0;
    let winner = loop {
        match rt.hub_receive_any(h) {
            Ok((_, Payload::Answer(t))) => break Some(t),
            Ok((_, Payload::Done)) => {
                exhausted += 1;
                if exhausted == goals.len() {
                    break None;
                }
            }
            Err(e) => {
                let _ = rt.stop_hub(h);
                return Err(e);
            }
        }
    };
    rt.stop_hub(h)?;
    Ok(winner)
}

/// Runs independent goals concurrently and collects each goal's FIRST answer,
/// positionally. The goals must not share variable slots; each runs from its
/// own fresh bindings. `None` means some goal terminated answerless, in which
/// case (as always on return) every spawned thread has been stopped.
pub fn concurrent_and(
    rt: &Runtime,
    projections: &[AnswerProjection],
    goals: &[Goal],
) -> Result<Option<Vec<Term>>, RuntimeError> {
    assert_eq!(
        projections.len(),
        goals.len(),
        "one projection per goal required"
    );
    let client = rt.client();
    let mut threads: Vec<ThreadId> = Vec::with_capacity(goals.len());
    for (projection, goal) in projections.iter().zip(goals) {
        match client.spawn(projection, goal) {
            Ok(t) => threads.push(t),
            Err(e) => {
                stop_all(&client, &threads);
                return Err(e);
            }
        }
    }
    let mut answers = Vec::with_capacity(threads.len());
    for &t in &threads {
        match client.receive_from(t) {
            Ok(Payload::Answer(term)) => answers.push(term),
            Ok(Payload::Done) => {
                stop_all(&client, &threads);
                return Ok(None);
            }
            Err(e) => {
                stop_all(&client, &threads);
                return Err(e);
            }
        }
    }
    stop_all(&client, &threads);
    Ok(Some(answers))
}

fn stop_all(client: &Client, threads: &[ThreadId]) {
    for &t in threads {
        let _ = client.stop(t);
    }
}
