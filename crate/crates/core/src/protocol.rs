//! Line-delimited JSON messages exchanged with external players.
//!
//! Machine indices are 1-based on the wire and 0-based everywhere else.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Longest line accepted from a peer.
pub const MAX_LINE: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Message {
    Job { size: Rational },
    Place { machine: usize },
    Stop { trimmed_ratio: Rational, real_ratio: Rational },
}

impl Message {
    pub fn parse_line(line: &str) -> Result<Message> {
        if line.len() > MAX_LINE {
            return Err(Error::Protocol("line too long".into()));
        }
        serde_json::from_str(line.trim_end_matches(['\r', '\n']))
            .map_err(|e| Error::Protocol(format!("bad message {line:?}: {e}")))
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("messages always serialize")
    }
}

/// Reads one message; `None` at end of stream.
pub fn read_message(input: &mut impl BufRead) -> Result<Option<Message>> {
    let mut line = String::new();
    let n = std::io::Read::take(&mut *input, MAX_LINE as u64 + 1).read_line(&mut line)?;
    if n == 0 {
        return Ok(None);
    }
    Message::parse_line(&line).map(Some)
}

pub fn write_message(out: &mut impl Write, msg: &Message) -> Result<()> {
    writeln!(out, "{}", msg.to_line())?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_round_trip() {
        let msgs = [
            Message::Job { size: Rational::new(3, 2) },
            Message::Place { machine: 2 },
            Message::Stop { trimmed_ratio: Rational::from(2), real_ratio: Rational::new(3, 2) },
        ];
        for m in msgs {
            assert_eq!(Message::parse_line(&m.to_line()).unwrap(), m);
        }
        assert_eq!(
            Message::Job { size: Rational::new(1, 2) }.to_line(),
            r#"{"type":"job","size":"1/2"}"#
        );
    }

    #[test]
    fn malformed_lines_are_protocol_errors() {
        for bad in [
            "",
            "{}",
            r#"{"type":"job","size":0.5}"#,
            r#"{"type":"place","machine":-1}"#,
            r#"{"type":"place","machine":1,"extra":true}"#,
            r#"{"type":"jump"}"#,
        ] {
            assert!(matches!(Message::parse_line(bad), Err(Error::Protocol(_))), "{bad}");
        }
    }

    #[test]
    fn stream_reading() {
        let text = "{\"type\":\"place\",\"machine\":1}\n";
        let mut r = std::io::Cursor::new(text.as_bytes());
        assert_eq!(read_message(&mut r).unwrap(), Some(Message::Place { machine: 1 }));
        assert_eq!(read_message(&mut r).unwrap(), None);
    }
}
