use obs_sim::scheduler::{lauc_select, lauc_vf_select, HorizonBook, ReservationRequest, Selection, VoidBook};
use obs_sim::SimTime;
use proptest::prelude::*;

/// Straightforward LAUC-VF over explicit interval lists.
fn reference_vf(channels: &mut [Vec<(u64, u64)>], start: u64, end: u64) -> Option<usize> {
    let mut best: Option<(usize, u64)> = None;
    for (c, iv) in channels.iter().enumerate() {
        if iv.iter().any(|&(s, e)| s < end && start < e) {
            continue;
        }
        let leading = iv
            .iter()
            .filter(|&&(_, e)| e <= start)
            .map(|&(_, e)| e)
            .max()
            .unwrap_or(0);
        if best.is_none_or(|(_, b)| leading > b) {
            best = Some((c, leading));
        }
    }
    let (c, _) = best?;
    channels[c].push((start, end));
    Some(c)
}

fn reference_lauc(horizons: &mut [u64], start: u64, end: u64) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (c, &h) in horizons.iter().enumerate() {
        if h <= start && best.is_none_or(|b| h > horizons[b]) {
            best = Some(c);
        }
    }
    let c = best?;
    horizons[c] = end;
    Some(c)
}

fn requests(max_len: usize) -> impl Strategy<Value = Vec<(u64, u64)>> {
    prop::collection::vec((0u64..200, 1u64..40), 1..max_len)
}

proptest! {
    #[test]
    fn lauc_vf_matches_reference(channels in 1usize..=3, reqs in requests(20)) {
        let mut book = VoidBook::new(channels);
        let mut reference = vec![Vec::new(); channels];
        for (i, &(start, len)) in reqs.iter().enumerate() {
            let req = ReservationRequest::new(SimTime(start), SimTime(len), i as u64);
            let got = lauc_vf_select(&mut book, &req).channel();
            prop_assert_eq!(got, reference_vf(&mut reference, start, start + len));
        }
        for (c, iv) in reference.iter_mut().enumerate() {
            iv.sort();
            let stored: Vec<(u64, u64)> = book.reservations(c).map(|(s, e)| (s.0, e.0)).collect();
            prop_assert_eq!(&stored, iv);
        }
    }

    #[test]
    fn lauc_matches_reference(channels in 1usize..=4, reqs in requests(30)) {
        let mut book = HorizonBook::new(channels);
        let mut reference = vec![0u64; channels];
        for (i, &(start, len)) in reqs.iter().enumerate() {
            let req = ReservationRequest::new(SimTime(start), SimTime(len), i as u64);
            let got = lauc_select(&mut book, &req).channel();
            prop_assert_eq!(got, reference_lauc(&mut reference, start, start + len));
        }
    }

    /// Pruning intervals that ended before the decision instant never changes
    /// a decision for requests that start at or after it.
    #[test]
    fn pruning_is_invisible(channels in 1usize..=3, steps in prop::collection::vec((0u64..30, 0u64..60, 1u64..40), 1..40)) {
        let mut pruned = VoidBook::new(channels);
        let mut full = VoidBook::new(channels);
        let mut now = 0u64;
        for (i, &(advance, lead, len)) in steps.iter().enumerate() {
            now += advance;
            pruned.prune(SimTime(now));
            let req = ReservationRequest::new(SimTime(now + lead), SimTime(len), i as u64);
            prop_assert_eq!(lauc_vf_select(&mut pruned, &req), lauc_vf_select(&mut full, &req));
        }
    }

    /// With non-decreasing start times no void can be filled, so both books agree.
    #[test]
    fn horizon_equals_void_filling_on_ordered_starts(channels in 1usize..=4, gaps in prop::collection::vec((0u64..20, 1u64..60), 1..60)) {
        let mut horizon = HorizonBook::new(channels);
        let mut void = VoidBook::new(channels);
        let mut start = 0u64;
        for (i, &(gap, len)) in gaps.iter().enumerate() {
            start += gap;
            let req = ReservationRequest::new(SimTime(start), SimTime(len), i as u64);
            let a = lauc_select(&mut horizon, &req);
            let b = lauc_vf_select(&mut void, &req);
            prop_assert_eq!(a, b);
            if let Selection::Channel(c) = a {
                prop_assert_eq!(horizon.horizon(c), SimTime(start + len));
            }
        }
    }
}
