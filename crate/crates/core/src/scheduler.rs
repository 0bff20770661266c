//! Wavelength reservation on one output link.
//!
//! Two kinds of channel state are kept:
//!
//! * [`HorizonBook`] remembers only the end of the last reservation per
//!   channel and pairs with [`lauc_select`].
//! * [`VoidBook`] remembers every future reservation interval, so requests
//!   can fill gaps between them; it pairs with [`lauc_vf_select`].
//!
//! Reservations are delayed: they start when the burst head reaches the
//! switch and last exactly the burst length. All intervals are half-open.
//! Every node has full wavelength conversion, so any free channel may be used.

use std::collections::VecDeque;

use crate::kernel::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReservationRequest {
    pub start: SimTime,
    pub duration: SimTime,
    pub burst_id: u64,
}

impl ReservationRequest {
    pub fn new(start: SimTime, duration: SimTime, burst_id: u64) -> Self {
        debug_assert!(duration > SimTime::ZERO, "reservation must have positive length");
        ReservationRequest {
            start,
            duration,
            burst_id,
        }
    }

    pub fn end(&self) -> SimTime {
        self.start + self.duration
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    Channel(usize),
    Blocked,
}

impl Selection {
    pub fn channel(self) -> Option<usize> {
        match self {
            Selection::Channel(c) => Some(c),
            Selection::Blocked => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HorizonBook {
    horizons: Vec<SimTime>,
}

impl HorizonBook {
    pub fn new(channels: usize) -> Self {
        assert!(channels >= 1, "a link needs at least one data channel");
        HorizonBook {
            horizons: vec![SimTime::ZERO; channels],
        }
    }

    pub fn from_horizons(horizons: Vec<SimTime>) -> Self {
        assert!(!horizons.is_empty());
        HorizonBook { horizons }
    }

    pub fn channels(&self) -> usize {
        self.horizons.len()
    }

    pub fn horizon(&self, channel: usize) -> SimTime {
        self.horizons[channel]
    }
}

/// Latest Available Unscheduled Channel on a horizon book.
///
/// Picks the idle channel whose horizon is closest to the request start;
/// ties go to the lowest index.
pub fn lauc_select(book: &mut HorizonBook, req: &ReservationRequest) -> Selection {
    let mut best: Option<(usize, SimTime)> = None;
    for (c, &h) in book.horizons.iter().enumerate() {
        if h <= req.start && best.is_none_or(|(_, bh)| h > bh) {
            best = Some((c, h));
        }
    }
    match best {
        Some((c, _)) => {
            book.horizons[c] = req.end();
            Selection::Channel(c)
        }
        None => Selection::Blocked,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct VoidChannel {
    /// Sorted, pairwise disjoint `[start, end)` intervals.
    reservations: VecDeque<(SimTime, SimTime)>,
    /// Largest end among pruned intervals.
    pruned_end: SimTime,
}

impl VoidChannel {
    /// `Some(leading_end)` if `[start, end)` fits, where `leading_end` is the end
    /// of the latest reservation finishing at or before `start`.
    fn fit(&self, start: SimTime, end: SimTime) -> Option<(usize, SimTime)> {
        let pos = self.reservations.partition_point(|&(_, e)| e <= start);
        if let Some(&(next_start, _)) = self.reservations.get(pos) {
            if next_start < end {
                return None;
            }
        }
        let leading = if pos > 0 {
            self.reservations[pos - 1].1
        } else {
            self.pruned_end
        };
        Some((pos, leading))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoidBook {
    channels: Vec<VoidChannel>,
}

impl VoidBook {
    pub fn new(channels: usize) -> Self {
        assert!(channels >= 1, "a link needs at least one data channel");
        VoidBook {
            channels: vec![VoidChannel::default(); channels],
        }
    }

    /// Builds a book from explicit per-channel intervals. Panics if any channel overlaps itself.
    pub fn from_reservations(channels: Vec<Vec<(SimTime, SimTime)>>) -> Self {
        assert!(!channels.is_empty());
        let channels = channels
            .into_iter()
            .map(|mut r| {
                r.sort();
                assert!(r.windows(2).all(|w| w[0].1 <= w[1].0), "overlapping reservations");
                VoidChannel {
                    reservations: r.into(),
                    pruned_end: SimTime::ZERO,
                }
            })
            .collect();
        VoidBook { channels }
    }

    pub fn channels(&self) -> usize {
        self.channels.len()
    }

    pub fn reservations(&self, channel: usize) -> impl Iterator<Item = (SimTime, SimTime)> + '_ {
        self.channels[channel].reservations.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.channels.iter().map(|c| c.reservations.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops intervals that ended at or before `now`.
    pub fn prune(&mut self, now: SimTime) {
        for ch in &mut self.channels {
            while let Some(&(_, end)) = ch.reservations.front() {
                if end > now {
                    break;
                }
                ch.pruned_end = ch.pruned_end.max(end);
                ch.reservations.pop_front();
            }
        }
    }
}

/// LAUC with void filling.
///
/// Among channels where the request interval is free, picks the one whose
/// preceding reservation ends latest (smallest leading gap); a channel with
/// nothing before the request counts as ending at time 0. Ties go to the
/// lowest index.
pub fn lauc_vf_select(book: &mut VoidBook, req: &ReservationRequest) -> Selection {
    let (start, end) = (req.start, req.end());
    let mut best: Option<(usize, usize, SimTime)> = None;
    for (c, ch) in book.channels.iter().enumerate() {
        if let Some((pos, leading)) = ch.fit(start, end) {
            if best.is_none_or(|(_, _, bl)| leading > bl) {
                best = Some((c, pos, leading));
            }
        }
    }
    match best {
        Some((c, pos, _)) => {
            book.channels[c].reservations.insert(pos, (start, end));
            Selection::Channel(c)
        }
        None => Selection::Blocked,
    }
}

/// Per-link data-channel state, chosen by architecture.
#[derive(Clone, Debug)]
pub enum ChannelBook {
    Horizon(HorizonBook),
    Void(VoidBook),
}

impl ChannelBook {
    pub fn channels(&self) -> usize {
        match self {
            ChannelBook::Horizon(b) => b.channels(),
            ChannelBook::Void(b) => b.channels(),
        }
    }

    /// Prunes (void books only) and selects a channel for `req`.
    pub fn reserve(&mut self, req: &ReservationRequest, now: SimTime) -> Selection {
        match self {
            ChannelBook::Horizon(b) => lauc_select(b, req),
            ChannelBook::Void(b) => {
                b.prune(now);
                lauc_vf_select(b, req)
            }
        }
    }
}
