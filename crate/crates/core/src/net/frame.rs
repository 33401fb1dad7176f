//! Wire framing: a fixed six-byte header (scheme, message index, payload
//! length) followed by the payload bytes.

use crate::schemes::{ProtocolError, SchemeId};
use std::io::{self, Read, Write};

/// Message index for a one-byte protocol error code.
pub const MSG_ERROR: u8 = 0xFF;
/// Message index for the post-handshake encrypted alert.
pub const MSG_ALERT: u8 = 0x04;

/// Upper bound on payload size accepted from the wire; far above anything
/// the schemes produce, low enough to stop absurd allocations.
pub const MAX_PAYLOAD: u32 = 1 << 20;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Frame {
    pub scheme_id: u8,
    pub msg_index: u8,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(scheme: SchemeId, msg_index: u8, payload: Vec<u8>) -> Self {
        debug_assert!(valid_index(msg_index), "message index {msg_index} not in the protocol");
        Frame { scheme_id: scheme.wire_id(), msg_index, payload }
    }

    /// One-byte error payload carrying the coarse protocol error code.
    pub fn error(scheme: SchemeId, err: &ProtocolError) -> Self {
        Frame { scheme_id: scheme.wire_id(), msg_index: MSG_ERROR, payload: vec![err.wire_code()] }
    }

    pub fn is_error(&self) -> bool {
        self.msg_index == MSG_ERROR
    }

    /// The protocol error an error frame carries.
    pub fn as_error(&self) -> Option<ProtocolError> {
        if !self.is_error() {
            return None;
        }
        let code = self.payload.first().copied().unwrap_or(0);
        Some(ProtocolError::from_wire_code(code))
    }

    pub fn scheme(&self) -> Option<SchemeId> {
        SchemeId::from_wire_id(self.scheme_id)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(6 + self.payload.len());
        out.push(self.scheme_id);
        out.push(self.msg_index);
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        if bytes.len() < 6 {
            return Err(ProtocolError::Malformed("frame shorter than its header".into()));
        }
        let scheme_id = bytes[0];
        let msg_index = bytes[1];
        let len = u32::from_be_bytes(bytes[2..6].try_into().expect("4 bytes")) as usize;
        if bytes.len() - 6 != len {
            return Err(ProtocolError::Malformed(format!(
                "frame length field says {len}, payload has {} bytes",
                bytes.len() - 6
            )));
        }
        let frame = Frame { scheme_id, msg_index, payload: bytes[6..].to_vec() };
        frame.validate()?;
        Ok(frame)
    }

    fn validate(&self) -> Result<(), ProtocolError> {
        if SchemeId::from_wire_id(self.scheme_id).is_none() {
            return Err(ProtocolError::Malformed(format!(
                "unknown scheme id {}",
                self.scheme_id
            )));
        }
        if !valid_index(self.msg_index) {
            return Err(ProtocolError::Malformed(format!(
                "message index {} not in the protocol",
                self.msg_index
            )));
        }
        Ok(())
    }

    /// Reads one frame from a stream. `Ok(None)` means the peer closed the
    /// stream cleanly at a frame boundary.
    pub fn read_from(reader: &mut impl Read) -> io::Result<Option<Frame>> {
        let mut header = [0u8; 6];
        let mut filled = 0;
        while filled < header.len() {
            match reader.read(&mut header[filled..])? {
                0 if filled == 0 => return Ok(None),
                0 => {
                    return Err(io::Error::new(
                        io::ErrorKind::UnexpectedEof,
                        "stream closed inside a frame header",
                    ))
                }
                n => filled += n,
            }
        }
        let len = u32::from_be_bytes(header[2..6].try_into().expect("4 bytes"));
        if len > MAX_PAYLOAD {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("frame payload of {len} bytes exceeds the limit"),
            ));
        }
        let mut payload = vec![0u8; len as usize];
        reader.read_exact(&mut payload)?;
        let frame = Frame { scheme_id: header[0], msg_index: header[1], payload };
        frame
            .validate()
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
        Ok(Some(frame))
    }

    pub fn write_to(&self, writer: &mut impl Write) -> io::Result<()> {
        writer.write_all(&self.encode())
    }
}

fn valid_index(idx: u8) -> bool {
    matches!(idx, 1..=3 | MSG_ALERT | MSG_ERROR)
}
