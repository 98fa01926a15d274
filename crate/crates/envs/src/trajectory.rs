use std::io::{self, Write};

/// Line-oriented dump: one `episode step agent action reward done` record
/// per agent per step, space separated, after a header line.
pub struct TrajectoryWriter<W: Write> {
    out: W,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "episode step agent action reward done")?;
        Ok(Self { out })
    }

    pub fn record(&mut self, episode: usize, step: usize, actions: &[usize], reward: f64, done: bool) -> io::Result<()> {
        for (agent, action) in actions.iter().enumerate() {
            writeln!(self.out, "{episode} {step} {agent} {action} {reward} {}", u8::from(done))?;
        }
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
