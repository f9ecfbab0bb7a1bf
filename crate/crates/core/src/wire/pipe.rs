//! In-memory duplex byte channel for testing sessions without sockets.

use std::collections::VecDeque;
use std::io::{self, Read, Write};
use std::sync::mpsc::{channel, Receiver, Sender};

/// One end of an in-memory reliable byte stream. Dropping an end closes its
/// direction; the peer then reads EOF after draining buffered bytes.
pub struct PipeEnd {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
    buffer: VecDeque<u8>,
}

/// A connected pair of pipe ends.
pub fn duplex() -> (PipeEnd, PipeEnd) {
    let (tx_a, rx_b) = channel();
    let (tx_b, rx_a) = channel();
    (
        PipeEnd {
            tx: tx_a,
            rx: rx_a,
            buffer: VecDeque::new(),
        },
        PipeEnd {
            tx: tx_b,
            rx: rx_b,
            buffer: VecDeque::new(),
        },
    )
}

impl Read for PipeEnd {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        while self.buffer.is_empty() {
            match self.rx.recv() {
                Ok(chunk) => self.buffer.extend(chunk),
                Err(_) => return Ok(0), // peer dropped: EOF
            }
        }
        let n = buf.len().min(self.buffer.len());
        for slot in buf.iter_mut().take(n) {
            *slot = self.buffer.pop_front().unwrap();
        }
        Ok(n)
    }
}

impl Write for PipeEnd {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.tx
            .send(buf.to_vec())
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "peer closed"))?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}
