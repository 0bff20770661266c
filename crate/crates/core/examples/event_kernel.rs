// The event kernel on its own: an M/M/1 queue driven by two seeded streams.

use obs_sim::kernel::{Event, Flow, Handler, Kernel, KernelError, RandomStream};
use obs_sim::SimTime;

#[derive(Clone, Copy, Debug)]
enum Ev {
    Arrival,
    Departure,
}

struct Queue {
    arrivals: RandomStream,
    service: RandomStream,
    in_system: u64,
    served: u64,
    limit: u64,
    area: f64,
    last: SimTime,
}

const MEAN_GAP: SimTime = SimTime(1_000_000);
const MEAN_SERVICE: SimTime = SimTime(800_000);

impl Handler<Ev> for Queue {
    type Error = KernelError;

    fn handle(&mut self, k: &mut Kernel<Ev>, ev: Event<Ev>) -> Result<Flow, KernelError> {
        self.area += self.in_system as f64 * (ev.fire_at - self.last).0 as f64;
        self.last = ev.fire_at;
        match ev.payload {
            Ev::Arrival => {
                self.in_system += 1;
                if self.in_system == 1 {
                    k.schedule(ev.fire_at + self.service.exponential_time(MEAN_SERVICE), Ev::Departure)?;
                }
                k.schedule(ev.fire_at + self.arrivals.exponential_time(MEAN_GAP), Ev::Arrival)?;
            }
            Ev::Departure => {
                self.in_system -= 1;
                self.served += 1;
                if self.served == self.limit {
                    return Ok(Flow::Stop);
                }
                if self.in_system > 0 {
                    k.schedule(ev.fire_at + self.service.exponential_time(MEAN_SERVICE), Ev::Departure)?;
                }
            }
        }
        Ok(Flow::Continue)
    }
}

pub fn run_example(customers: u64) -> anyhow::Result<f64> {
    let mut kernel = Kernel::new();
    kernel.schedule(SimTime::ZERO, Ev::Arrival)?;
    let mut q = Queue {
        arrivals: RandomStream::new(1, "arrivals"),
        service: RandomStream::new(1, "service"),
        in_system: 0,
        served: 0,
        limit: customers,
        area: 0.0,
        last: SimTime::ZERO,
    };
    let summary = kernel.run_until(SimTime(u64::MAX), &mut q)?;
    let mean = q.area / q.last.0 as f64;
    let rho = MEAN_SERVICE.0 as f64 / MEAN_GAP.0 as f64;
    println!(
        "{} events, trace digest {:016x}; mean number in system {mean:.3} (rho/(1-rho) = {:.3})",
        summary.dispatched,
        summary.trace_digest,
        rho / (1.0 - rho)
    );
    Ok(mean)
}

fn main() -> anyhow::Result<()> {
    run_example(1_000_000)?;
    Ok(())
}
