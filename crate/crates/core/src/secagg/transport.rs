use std::collections::{HashMap, VecDeque};

use super::transcript::{Message, MessageKind, Party, Transcript};

/// A message with its serialized payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub round: u64,
    pub sender: Party,
    pub receiver: Party,
    pub kind: MessageKind,
    pub payload: Vec<u8>,
}

/// In-process star network. Every payload is a byte buffer, and every send
/// is recorded in the transcript with its exact length.
#[derive(Debug, Default)]
pub struct MessageBus {
    inboxes: HashMap<Party, VecDeque<Envelope>>,
    transcript: Transcript,
    captured: Option<Vec<Envelope>>,
}

impl MessageBus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Keeps a copy of every envelope, payload included, for inspection by
    /// tests playing the part of an eavesdropping server.
    pub fn capture(&mut self) {
        self.captured.get_or_insert_with(Vec::new);
    }

    pub fn captured(&self) -> &[Envelope] {
        self.captured.as_deref().unwrap_or(&[])
    }

    pub fn send(&mut self, envelope: Envelope) {
        if let Some(c) = &mut self.captured {
            c.push(envelope.clone());
        }
        self.transcript.push(Message {
            round: envelope.round,
            sender: envelope.sender,
            receiver: envelope.receiver,
            bytes: envelope.payload.len(),
            kind: envelope.kind,
        });
        self.inboxes.entry(envelope.receiver).or_default().push_back(envelope);
    }

    pub fn recv(&mut self, party: Party) -> Option<Envelope> {
        self.inboxes.get_mut(&party)?.pop_front()
    }

    /// Removes and returns every pending message for `party`.
    pub fn drain(&mut self, party: Party) -> Vec<Envelope> {
        self.inboxes.get_mut(&party).map(|q| q.drain(..).collect()).unwrap_or_default()
    }

    pub fn pending(&self) -> usize {
        self.inboxes.values().map(VecDeque::len).sum()
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }
}
