use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Party {
    Server,
    Client(u32),
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Server => f.write_str("server"),
            Party::Client(i) => write!(f, "c{i}"),
        }
    }
}

impl FromStr for Party {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "server" {
            return Ok(Party::Server);
        }
        s.strip_prefix('c')
            .and_then(|id| id.parse().ok())
            .map(Party::Client)
            .ok_or_else(|| Error::Parse(format!("bad party `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    /// Key-agreement public key, relayed by the server to one neighbour.
    PublicKey,
    /// Masked field vector uploaded to the server.
    MaskedInput,
    /// Aggregated marginals sent back to each client.
    Marginals,
    /// The projection matrix, by value.
    Projection,
    /// The projection seed, when the matrix is derived locally.
    ProjectionSeed,
}

impl MessageKind {
    const NAMES: [(MessageKind, &'static str); 5] = [
        (MessageKind::PublicKey, "public-key"),
        (MessageKind::MaskedInput, "masked-input"),
        (MessageKind::Marginals, "marginals"),
        (MessageKind::Projection, "projection"),
        (MessageKind::ProjectionSeed, "projection-seed"),
    ];

    pub fn name(self) -> &'static str {
        Self::NAMES.iter().find(|(k, _)| *k == self).unwrap().1
    }
}

impl FromStr for MessageKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::NAMES
            .iter()
            .find(|(_, n)| *n == s)
            .map(|(k, _)| *k)
            .ok_or_else(|| Error::Parse(format!("bad message kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Message {
    pub round: u64,
    pub sender: Party,
    pub receiver: Party,
    pub bytes: usize,
    pub kind: MessageKind,
}

impl Message {
    /// Client-to-client messages travel through the server, which therefore
    /// both receives and sends them.
    pub fn is_relayed(&self) -> bool {
        matches!((self.sender, self.receiver), (Party::Client(_), Party::Client(_)))
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}\t{}\t{}", self.round, self.sender, self.receiver, self.bytes, self.kind.name())
    }
}

impl FromStr for Message {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split('\t').collect();
        let [round, sender, receiver, bytes, kind] = fields[..] else {
            return Err(Error::Parse(format!("transcript line needs 5 tab-separated fields: `{line}`")));
        };
        let num = |s: &str| s.parse::<u64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
        Ok(Message {
            round: num(round)?,
            sender: sender.parse()?,
            receiver: receiver.parse()?,
            bytes: num(bytes)? as usize,
            kind: kind.parse()?,
        })
    }
}

/// Append-only log of every message, in send order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    messages: Vec<Message>,
}

impl Transcript {
    pub fn push(&mut self, m: Message) {
        self.messages.push(m);
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn extend(&mut self, other: &Transcript) {
        self.messages.extend_from_slice(&other.messages);
    }

    pub fn sent_by(&self, p: Party) -> impl Iterator<Item = &Message> {
        self.messages.iter().filter(move |m| m.sender == p)
    }

    pub fn received_by(&self, p: Party) -> impl Iterator<Item = &Message> {
        self.messages.iter().filter(move |m| m.receiver == p)
    }

    pub fn bytes_sent(&self, p: Party) -> usize {
        self.sent_by(p).map(|m| m.bytes).sum()
    }

    pub fn bytes_received(&self, p: Party) -> usize {
        self.received_by(p).map(|m| m.bytes).sum()
    }

    /// Server traffic in both directions, counting relayed messages twice.
    pub fn server_bytes(&self) -> usize {
        self.messages
            .iter()
            .map(|m| if m.is_relayed() { 2 * m.bytes } else if m.sender == Party::Server || m.receiver == Party::Server { m.bytes } else { 0 })
            .sum()
    }

    /// Distinct round ids carrying masked uploads.
    pub fn aggregation_rounds(&self) -> Vec<u64> {
        let mut rounds: Vec<u64> = self.messages.iter().filter(|m| m.kind == MessageKind::MaskedInput).map(|m| m.round).collect();
        rounds.sort_unstable();
        rounds.dedup();
        rounds
    }

    pub fn to_log(&self) -> String {
        let mut out = String::from("round\tsender\treceiver\tbytes\tkind\n");
        for m in &self.messages {
            out.push_str(&m.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse_log(text: &str) -> Result<Self> {
        let messages = text
            .lines()
            .filter(|l| !l.is_empty() && !l.starts_with("round\t"))
            .map(str::parse)
            .collect::<Result<_>>()?;
        Ok(Self { messages })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_round_trip() {
        let mut t = Transcript::default();
        t.push(Message { round: 0, sender: Party::Client(3), receiver: Party::Client(7), bytes: 32, kind: MessageKind::PublicKey });
        t.push(Message { round: 1, sender: Party::Client(3), receiver: Party::Server, bytes: 80, kind: MessageKind::MaskedInput });
        t.push(Message { round: 1, sender: Party::Server, receiver: Party::Client(3), bytes: 40, kind: MessageKind::Marginals });
        let log = t.to_log();
        assert!(log.contains("0\tc3\tc7\t32\tpublic-key"));
        assert_eq!(Transcript::parse_log(&log).unwrap(), t);
        assert_eq!(t.bytes_sent(Party::Client(3)), 112);
        assert_eq!(t.server_bytes(), 64 + 80 + 40);
        assert_eq!(t.aggregation_rounds(), vec![1]);
        assert!(Transcript::parse_log("1\tc1\tserver\tx\tmasked-input").is_err());
        assert!(Transcript::parse_log("1\tc1\tserver\t8").is_err());
    }
}
