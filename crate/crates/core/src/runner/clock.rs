use std::time::{Duration, Instant};

/// Paces simulated time against the wall clock.
pub trait Pacer {
    fn wait_until(&mut self, sim_time: f64);
}

/// As fast as possible.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unpaced;

impl Pacer for Unpaced {
    fn wait_until(&mut self, _sim_time: f64) {}
}

/// Soft real time: sim time `t` is reached no earlier than `t / speedup` wall seconds after start.
#[derive(Debug, Clone)]
pub struct RealTime {
    start: Option<Instant>,
    speedup: f64,
}

impl RealTime {
    pub fn new(speedup: f64) -> Self {
        RealTime {
            start: None,
            speedup: if speedup > 0.0 { speedup } else { 1.0 },
        }
    }
}

impl Pacer for RealTime {
    fn wait_until(&mut self, sim_time: f64) {
        let start = *self.start.get_or_insert_with(Instant::now);
        let target = start + Duration::from_secs_f64(sim_time / self.speedup);
        let now = Instant::now();
        if target > now {
            std::thread::sleep(target - now);
        }
    }
}
