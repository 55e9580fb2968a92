//! Border extension for stencils that read outside the frame.
//!
//! Channel-aware stencils must read a sample of the same CFA phase as the
//! one they would have read inside the frame, so out-of-range coordinates are
//! moved back inside by whole tile periods. When the frame is narrower than
//! the period this degrades to edge replication.

#[inline]
pub(crate) fn phase_index(i: isize, len: usize, period: usize) -> usize {
    let len_i = len as isize;
    let p = period.max(1) as isize;
    let j = if i < 0 {
        i + p * ((-i + p - 1) / p)
    } else if i >= len_i {
        i - p * ((i - len_i + p) / p)
    } else {
        return i as usize;
    };
    j.clamp(0, len_i - 1) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inside_is_identity() {
        for i in 0..10 {
            assert_eq!(phase_index(i, 10, 4), i as usize);
        }
    }

    #[test]
    fn outside_keeps_phase() {
        for period in [2usize, 4] {
            for i in -9isize..19 {
                let j = phase_index(i, 10, period);
                assert!(j < 10);
                assert_eq!((j as isize).rem_euclid(period as isize), i.rem_euclid(period as isize));
                // Lands within one period of the nearest edge.
                if i < 0 {
                    assert!(j < period);
                } else if i >= 10 {
                    assert!(j >= 10 - period);
                }
            }
        }
    }
}
