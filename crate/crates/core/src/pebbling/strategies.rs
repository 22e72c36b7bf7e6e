//! Strategy generators.
//!
//! * Black: the bottom-up recursion using exactly `h` pebbles.
//! * Whole black-white: the recursive read-once procedure using
//!   `ceil(h/2) + 1` pebbles. Each subtree run splits into an attack phase
//!   (ending with the subtree root black-pebbled), a critical move (dropping
//!   the root's right child), and a cleanup phase discharging the leftover
//!   white pebble and suspended subtree.
//! * Fractional: for even heights the whole strategy already meets the
//!   `h/2 + 1` bound. For odd heights the right child of each recursion
//!   root is brought to value 1 as a half black (computed from its children,
//!   then half-forgotten) topped up by a half white, shaving the extra half
//!   pebble; the half white is discharged at the end by re-pebbling the
//!   child's children.

use num_traits::One;

use crate::tree::TreeShape;

use super::{pebble, Pebble, PebbleMove, PebbleSequence, PebbleVariant};

fn place(node: usize, amount: Pebble) -> PebbleMove {
    PebbleMove::PlaceBlack {
        node,
        amount,
        from_child: None,
    }
}

fn slide(node: usize, child: usize) -> PebbleMove {
    PebbleMove::PlaceBlack {
        node,
        amount: Pebble::one(),
        from_child: Some((child, Pebble::one())),
    }
}

fn dec(node: usize, amount: Pebble) -> PebbleMove {
    PebbleMove::DecreaseBlack { node, amount }
}

fn white(node: usize, amount: Pebble) -> PebbleMove {
    PebbleMove::IncreaseWhite { node, amount }
}

fn unwhite(node: usize) -> PebbleMove {
    PebbleMove::RemoveWhite { node }
}

/// Valid black sequence with peak exactly `h`: pebble the left subtree,
/// then the right with the left root held, slide to the parent and drop the
/// sibling.
pub fn generate_black_strategy(h: u32) -> PebbleSequence {
    fn go(node: usize, height: u32, moves: &mut Vec<PebbleMove>) {
        if height == 1 {
            moves.push(place(node, Pebble::one()));
            return;
        }
        go(2 * node, height - 1, moves);
        go(2 * node + 1, height - 1, moves);
        moves.push(slide(node, 2 * node));
        moves.push(dec(2 * node + 1, Pebble::one()));
    }
    let shape = TreeShape::new(h).expect("h >= 2");
    let mut moves = Vec::new();
    go(1, h, &mut moves);
    moves.push(dec(1, Pebble::one()));
    PebbleSequence {
        shape,
        variant: PebbleVariant::Black,
        denominator: 1,
        moves,
    }
}

/// Move list for one subtree run, split at the points callers interleave.
struct Segments {
    /// From empty subtree to the subtree root black-pebbled (last move is
    /// the slide onto the root).
    attack: Vec<PebbleMove>,
    /// The critical move: drop the root's right child, reaching the
    /// minimal root-pebbled configuration.
    crit: Vec<PebbleMove>,
    /// Clears everything the attack left behind; run after the caller has
    /// consumed the root pebble.
    cleanup: Vec<PebbleMove>,
}

impl Segments {
    /// Full run keeping the subtree root black-pebbled.
    fn keep_root(self) -> Vec<PebbleMove> {
        let mut moves = self.attack;
        moves.extend(self.crit);
        moves.extend(self.cleanup);
        moves
    }
}

fn wbw_segments(root: usize, m: u32) -> Segments {
    let one = Pebble::one();
    if m == 1 {
        return Segments {
            attack: vec![place(root, one)],
            crit: vec![],
            cleanup: vec![],
        };
    }
    let (c2, c3) = (2 * root, 2 * root + 1);
    if m == 2 {
        return Segments {
            attack: vec![place(c2, one), place(c3, one), slide(root, c2)],
            crit: vec![dec(c3, one)],
            cleanup: vec![],
        };
    }
    let (g4, g5, g6, g7) = (4 * root, 4 * root + 1, 4 * root + 2, 4 * root + 3);
    let s4 = wbw_segments(g4, m - 2);
    let s5 = wbw_segments(g5, m - 2);
    let s6 = wbw_segments(g6, m - 2);

    let mut attack = s4.keep_root();
    attack.extend(s5.attack);
    attack.extend(s5.crit);
    attack.push(slide(c2, g4));
    attack.push(dec(g5, one));
    attack.extend(s5.cleanup);
    attack.extend(s6.attack);
    attack.extend(s6.crit);
    attack.push(white(g7, one));
    attack.push(slide(c3, g6));
    attack.push(slide(root, c2));

    let crit = vec![dec(c3, one)];

    let mut cleanup = s6.cleanup;
    cleanup.extend(wbw_discharge(g7, m - 2));

    Segments {
        attack,
        crit,
        cleanup,
    }
}

/// Removes a whole white pebble sitting on `root` by pebbling both its
/// children with the usual procedure, verifying, and clearing up.
fn wbw_discharge(root: usize, m: u32) -> Vec<PebbleMove> {
    let one = Pebble::one();
    if m == 1 {
        return vec![unwhite(root)];
    }
    let (c2, c3) = (2 * root, 2 * root + 1);
    let segs = wbw_segments(root, m);
    let mut moves = segs.attack;
    let last = moves.pop();
    debug_assert!(matches!(
        last,
        Some(PebbleMove::PlaceBlack { node, .. }) if node == root
    ));
    moves.push(unwhite(root));
    moves.push(dec(c2, one));
    moves.push(dec(c3, one));
    moves.extend(segs.cleanup);
    moves
}

/// Valid read-once whole black-white sequence with peak `ceil(h/2) + 1`.
/// While the root is black-pebbled the rest of the tree carries at most
/// `ceil(h/2)` pebbles.
pub fn generate_ro_wbw_strategy(h: u32) -> PebbleSequence {
    let shape = TreeShape::new(h).expect("h >= 2");
    let segs = wbw_segments(1, h);
    let mut moves = segs.attack;
    moves.extend(segs.crit);
    moves.push(dec(1, Pebble::one()));
    moves.extend(segs.cleanup);
    PebbleSequence {
        shape,
        variant: PebbleVariant::WholeBw,
        denominator: 1,
        moves,
    }
}

fn frac_segments(root: usize, m: u32) -> Segments {
    debug_assert!(m >= 3 && m % 2 == 1);
    let one = Pebble::one();
    let half = pebble(1, 2);
    let (c2, c3) = (2 * root, 2 * root + 1);
    let (g4, g5, g6, g7) = (4 * root, 4 * root + 1, 4 * root + 2, 4 * root + 3);

    if m == 3 {
        // Half-black the right child early (children are leaves), pebble
        // the left child, then top the right child up with a half white.
        let attack = vec![
            place(g6, one),
            place(g7, one),
            PebbleMove::PlaceBlack {
                node: c3,
                amount: half,
                from_child: Some((g6, one)),
            },
            dec(g7, one),
            place(g4, one),
            place(g5, one),
            slide(c2, g4),
            dec(g5, one),
            white(c3, half),
            slide(root, c2),
        ];
        let crit = vec![dec(c3, half)];
        let cleanup = vec![
            place(g6, one),
            place(g7, one),
            unwhite(c3),
            dec(g6, one),
            dec(g7, one),
        ];
        return Segments {
            attack,
            crit,
            cleanup,
        };
    }

    let s4 = frac_segments(g4, m - 2);
    let s5 = frac_segments(g5, m - 2);
    let s6 = frac_segments(g6, m - 2);

    let mut attack = s4.keep_root();
    attack.extend(s5.attack);
    attack.extend(s5.crit);
    attack.push(slide(c2, g4));
    attack.push(dec(g5, one));
    attack.extend(s5.cleanup);
    attack.extend(s6.attack);
    attack.extend(s6.crit);
    attack.push(white(g7, one));
    attack.push(slide(c3, g6));
    attack.push(slide(root, c2));

    let crit = vec![dec(c3, one)];

    let mut cleanup = s6.cleanup;
    cleanup.extend(frac_discharge(g7, m - 2));

    Segments {
        attack,
        crit,
        cleanup,
    }
}

/// Fractional counterpart of `wbw_discharge` for odd subtree heights.
fn frac_discharge(root: usize, m: u32) -> Vec<PebbleMove> {
    debug_assert!(m >= 3 && m % 2 == 1);
    let one = Pebble::one();
    let (c2, c3) = (2 * root, 2 * root + 1);
    let segs = frac_segments(root, m);
    let mut moves = segs.attack;
    let last = moves.pop();
    debug_assert!(matches!(
        last,
        Some(PebbleMove::PlaceBlack { node, .. }) if node == root
    ));
    moves.push(unwhite(root));
    moves.push(dec(c2, one));
    // Drop the black part of the right child; at m == 3 it is a half.
    moves.push(if m == 3 {
        dec(c3, pebble(1, 2))
    } else {
        dec(c3, one)
    });
    moves.extend(segs.cleanup);
    moves
}

/// Valid fractional sequence with peak at most `h/2 + 1`, every pebble
/// value a multiple of `1/2`. Only `d = 2` is supported: the known optimal
/// strategies need no finer grain.
pub fn generate_fractional_strategy(h: u32, denominator: u32) -> Option<PebbleSequence> {
    if denominator != 2 {
        return None;
    }
    let shape = TreeShape::new(h).expect("h >= 2");
    if h % 2 == 0 {
        // The whole read-once strategy peaks at ceil(h/2)+1 = h/2+1 already.
        let whole = generate_ro_wbw_strategy(h);
        return Some(PebbleSequence {
            shape,
            variant: PebbleVariant::FractionalBw,
            denominator: 2,
            moves: whole.moves,
        });
    }
    let segs = frac_segments(1, h);
    let mut moves = segs.attack;
    moves.extend(segs.crit);
    moves.push(dec(1, Pebble::one()));
    moves.extend(segs.cleanup);
    Some(PebbleSequence {
        shape,
        variant: PebbleVariant::FractionalBw,
        denominator: 2,
        moves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pebbling::{is_read_once, validate_sequence};

    #[test]
    fn black_peaks_at_h() {
        for h in 2..=6 {
            let seq = generate_black_strategy(h);
            assert_eq!(validate_sequence(&seq).unwrap(), pebble(h as i64, 1));
        }
    }

    #[test]
    fn wbw_peaks_at_half_h_plus_one_and_is_read_once() {
        for h in 2..=7 {
            let seq = generate_ro_wbw_strategy(h);
            let expected = pebble((h as i64 + 1) / 2 + 1, 1);
            assert_eq!(validate_sequence(&seq).unwrap(), expected, "h={h}");
            assert!(is_read_once(&seq).unwrap(), "h={h}");
        }
    }

    #[test]
    fn wbw_critical_time_bound() {
        // While the root is black-pebbled, at most ceil(h/2) other pebbles.
        for h in 2..=6 {
            let seq = generate_ro_wbw_strategy(h);
            let cap = pebble((h as i64 + 1) / 2, 1);
            for config in seq.configs().unwrap() {
                if config.black(1) == Pebble::one() {
                    assert!(config.total() - config.black(1) <= cap, "h={h}");
                }
            }
        }
    }

    #[test]
    fn fractional_peaks_within_half_h_plus_one() {
        for h in 2..=7 {
            let seq = generate_fractional_strategy(h, 2).unwrap();
            let peak = validate_sequence(&seq).unwrap();
            let bound = pebble(h as i64, 2) + pebble(1, 1);
            assert!(peak <= bound, "h={h}: peak {peak} over {bound}");
            // Every value a multiple of 1/2.
            for config in seq.configs().unwrap() {
                for node in seq.shape.nodes() {
                    assert!(*config.black(node).denom() <= 2);
                    assert!(*config.white(node).denom() <= 2);
                }
            }
        }
    }

    #[test]
    fn fractional_odd_heights_save_a_half() {
        for h in [3i64, 5, 7] {
            let seq = generate_fractional_strategy(h as u32, 2).unwrap();
            assert_eq!(validate_sequence(&seq).unwrap(), pebble(h, 2) + pebble(1, 1));
        }
    }

    #[test]
    fn fractional_requires_denominator_two() {
        assert!(generate_fractional_strategy(3, 4).is_none());
    }
}
