use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geometry::{in_causal_future, SpacetimePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Input,
    Place,
    Arrive,
    Receive,
    Let,
    Measure,
    Apply,
    TeleportSend,
    TeleportReceive,
    Send,
    Broadcast,
    Output,
    Move,
}

/// One processed event. `reads` lists the events whose data it used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub id: usize,
    pub kind: EventKind,
    pub agent: Option<String>,
    pub point: SpacetimePoint,
    pub detail: String,
    pub reads: Vec<usize>,
}

/// Check that every data edge points into the causal future of its source
/// and that the trace lists sources before their readers.
pub fn audit_trace(trace: &[TraceEvent]) -> Result<(), String> {
    for (pos, e) in trace.iter().enumerate() {
        if e.id != pos {
            return Err(format!("event {} stored at position {pos}", e.id));
        }
        for &r in &e.reads {
            if r >= pos {
                return Err(format!("event {} reads later event {r}", e.id));
            }
            let src = &trace[r];
            match in_causal_future(&src.point, &e.point) {
                Ok(true) => {}
                _ => {
                    return Err(format!(
                        "event {} at {} reads event {r} at {}, outside its causal past",
                        e.id, e.point, src.point
                    ))
                }
            }
        }
    }
    Ok(())
}

/// SHA-256 over the canonical JSON of a sequence of traces.
pub fn trace_digest<'a>(traces: impl IntoIterator<Item = &'a [TraceEvent]>) -> String {
    let mut h = Sha256::new();
    for t in traces {
        let bytes = serde_json::to_vec(t).expect("trace serializes");
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(id: usize, t: f64, x: f64, reads: Vec<usize>) -> TraceEvent {
        TraceEvent {
            id,
            kind: EventKind::Let,
            agent: None,
            point: SpacetimePoint::new_1d(t, x),
            detail: String::new(),
            reads,
        }
    }

    #[test]
    fn audit_accepts_causal_and_rejects_spacelike_edges() {
        assert!(audit_trace(&[ev(0, 0.0, 0.0, vec![]), ev(1, 1.0, 1.0, vec![0])]).is_ok());
        assert!(audit_trace(&[ev(0, 0.0, 0.0, vec![]), ev(1, 1.0, 2.0, vec![0])]).is_err());
        assert!(audit_trace(&[ev(0, 0.0, 0.0, vec![1]), ev(1, 1.0, 0.0, vec![])]).is_err());
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = vec![ev(0, 0.0, 0.0, vec![])];
        let b = vec![ev(0, 0.0, 0.5, vec![])];
        assert_eq!(trace_digest([a.as_slice()]), trace_digest([a.as_slice()]));
        assert_ne!(trace_digest([a.as_slice()]), trace_digest([b.as_slice()]));
        assert_eq!(trace_digest([a.as_slice()]).len(), 64);
    }
}
