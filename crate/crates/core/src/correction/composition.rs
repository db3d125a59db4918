//! Mashup composition repair.
//!
//! A mashup's composition is a timeline of contiguous half-open segments,
//! each holding the API set in use during that interval. When an API in the
//! current set becomes unavailable, the set is transformed by the API's
//! death pattern: a dead API is removed, a transferred API is replaced by
//! its successor, a split API is replaced by all of its successors.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::date::Day;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub from: Day,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<Day>,
    pub api_ids: BTreeSet<String>,
}

impl Segment {
    /// An empty composition means the mashup can no longer invoke anything.
    pub fn is_functionally_dead(&self) -> bool {
        self.api_ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositionTimeline {
    pub mashup_id: String,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "pattern")]
pub enum DeathPattern {
    Death,
    Transfer { successor: String },
    Split { successors: Vec<String> },
}

/// An API becoming unavailable, as replayed against a composition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnavailabilityEvent {
    pub api_id: String,
    pub pattern: DeathPattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApplyOutcome {
    Applied,
    /// The API was not in the current set; replay is idempotent.
    NoOp,
}

impl CompositionTimeline {
    pub fn new(mashup_id: &str, start: Day, initial: BTreeSet<String>) -> CompositionTimeline {
        CompositionTimeline {
            mashup_id: mashup_id.to_string(),
            segments: vec![Segment {
                from: start,
                to: None,
                api_ids: initial,
            }],
        }
    }

    pub fn current(&self) -> &Segment {
        self.segments.last().expect("timeline has at least one segment")
    }

    /// The segment covering `t` under the half-open convention, if any.
    pub fn segment_at(&self, t: Day) -> Option<&Segment> {
        self.segments
            .iter()
            .find(|seg| t >= seg.from && seg.to.map_or(true, |to| t < to))
    }

    /// API set in use at `t`, empty if `t` is outside the timeline.
    pub fn set_at(&self, t: Day) -> Option<&BTreeSet<String>> {
        self.segment_at(t).map(|seg| &seg.api_ids)
    }

    /// Close the open tail segment at `end`.
    pub fn close(&mut self, end: Day) {
        if let Some(last) = self.segments.last_mut() {
            if last.to.is_none() && end > last.from {
                last.to = Some(end);
            }
        }
    }

    /// Apply one unavailability event at time `t` to the open tail segment.
    ///
    /// Closes the current segment at `t` and opens a new one with the
    /// transformed set; an event at exactly the segment start transforms the
    /// set in place so no zero-length segment is created. Events whose API
    /// is not in the current set are no-ops. Events before the current
    /// segment start are clamped to it.
    pub fn apply_event(&mut self, event: &UnavailabilityEvent, t: Day) -> ApplyOutcome {
        let last = self.segments.last_mut().expect("non-empty timeline");
        if last.to.is_some() {
            // Timeline already closed; nothing is active to transform.
            return ApplyOutcome::NoOp;
        }
        if !last.api_ids.contains(&event.api_id) {
            return ApplyOutcome::NoOp;
        }
        let t = t.max(last.from);
        let mut next_set: BTreeSet<String> = last.api_ids.clone();
        next_set.remove(&event.api_id);
        match &event.pattern {
            DeathPattern::Death => {}
            DeathPattern::Transfer { successor } => {
                next_set.insert(successor.clone());
            }
            DeathPattern::Split { successors } => {
                next_set.extend(successors.iter().cloned());
            }
        }
        if t == last.from {
            last.api_ids = next_set;
        } else {
            last.to = Some(t);
            self.segments.push(Segment {
                from: t,
                to: None,
                api_ids: next_set,
            });
        }
        ApplyOutcome::Applied
    }

    /// Segments must be contiguous, non-overlapping, and non-empty in span.
    pub fn invariants_hold(&self) -> bool {
        if self.segments.is_empty() {
            return false;
        }
        for pair in self.segments.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            match a.to {
                Some(to) if to == b.from && a.from < to => {}
                _ => return false,
            }
        }
        let last = self.segments.last().unwrap();
        last.to.map_or(true, |to| to > last.from)
    }
}

/// Pure form of [`CompositionTimeline::apply_event`]: returns the
/// transformed timeline, leaving the input untouched.
pub fn correct_composition(
    timeline: &CompositionTimeline,
    event: &UnavailabilityEvent,
    t: Day,
) -> CompositionTimeline {
    let mut next = timeline.clone();
    next.apply_event(event, t);
    next
}
