//! Scripted adversarial channel for the in-memory harness.
//!
//! A script is an ordered queue of actions. Each frame that crosses the
//! channel consumes actions from the front until one of them disposes of
//! the frame; delays advance the clock without consuming a frame, so a
//! `Delay` followed by `Deliver` models a message held back and released
//! late. An exhausted script delivers everything untouched.

use super::clock::Clock;
use super::frame::Frame;
use std::collections::VecDeque;
use std::time::Duration;

#[derive(Clone, Debug)]
pub enum Action {
    /// Pass the frame through unchanged.
    Deliver,
    /// Swallow the frame; the receiver never sees it.
    Drop,
    /// Flip bits in one payload byte. The offset must be inside the
    /// payload and the mask must change something.
    Tamper { offset: usize, mask: u8 },
    /// Deliver a previously recorded frame instead of the current one.
    Replay(Frame),
    /// Advance time, then apply the next action to the same frame.
    Delay(Duration),
}

#[derive(Clone, Debug, Default)]
pub struct ChannelScript {
    actions: VecDeque<Action>,
}

impl ChannelScript {
    /// A script with no interference at all.
    pub fn honest() -> Self {
        Self::default()
    }

    pub fn new(actions: impl IntoIterator<Item = Action>) -> Self {
        ChannelScript { actions: actions.into_iter().collect() }
    }

    pub fn is_exhausted(&self) -> bool {
        self.actions.is_empty()
    }

    /// Disposes of one in-flight frame per the script. `None` means the
    /// frame was dropped.
    pub fn apply(&mut self, frame: Frame, clock: &dyn Clock) -> Option<Frame> {
        loop {
            match self.actions.pop_front() {
                None | Some(Action::Deliver) => return Some(frame),
                Some(Action::Drop) => return None,
                Some(Action::Tamper { offset, mask }) => {
                    assert_ne!(mask, 0, "a zero mask would not tamper anything");
                    assert!(
                        offset < frame.payload.len(),
                        "tamper offset {offset} outside a {}-byte payload",
                        frame.payload.len()
                    );
                    let mut frame = frame;
                    frame.payload[offset] ^= mask;
                    return Some(frame);
                }
                Some(Action::Replay(recorded)) => return Some(recorded),
                Some(Action::Delay(d)) => clock.delay(d),
            }
        }
    }
}
