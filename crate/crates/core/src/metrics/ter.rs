//! Translation edit rate: word-level Levenshtein distance plus greedy block shifts.

/// Longest block considered for a single shift.
pub const MAX_SHIFT_SIZE: usize = 10;

pub fn edit_distance<S: PartialEq>(hyp: &[S], reference: &[S]) -> usize {
    let mut prev: Vec<usize> = (0..=reference.len()).collect();
    let mut cur = vec![0; reference.len() + 1];
    for (i, h) in hyp.iter().enumerate() {
        cur[0] = i + 1;
        for (j, r) in reference.iter().enumerate() {
            let sub = prev[j] + usize::from(h != r);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[reference.len()]
}

/// Moves `seq[start..start + len]` so that it begins at index `dest` of the result.
pub fn shift_block<S: Clone>(seq: &[S], start: usize, len: usize, dest: usize) -> Vec<S> {
    let block = &seq[start..start + len];
    let mut rest: Vec<S> = seq[..start].to_vec();
    rest.extend_from_slice(&seq[start + len..]);
    let mut out = Vec::with_capacity(seq.len());
    out.extend_from_slice(&rest[..dest]);
    out.extend_from_slice(block);
    out.extend_from_slice(&rest[dest..]);
    out
}

/// Hypotheses up to this length are searched exhaustively over shift
/// sequences; longer ones use the greedy search.
pub const EXACT_SEARCH_MAX_LEN: usize = 6;

/// Number of edits (shifts + insertions + deletions + substitutions).
pub fn ter_edits<S: PartialEq + Clone + Ord>(hyp: &[S], reference: &[S]) -> usize {
    if hyp.len() <= EXACT_SEARCH_MAX_LEN {
        exact_edits(hyp, reference)
    } else {
        greedy_edits(hyp, reference)
    }
}

/// Minimum of `shifts + edit_distance` over every sequence of block shifts,
/// explored breadth-first so each arrangement is reached with its fewest shifts.
fn exact_edits<S: PartialEq + Clone + Ord>(hyp: &[S], reference: &[S]) -> usize {
    use std::collections::BTreeSet;

    let mut best = edit_distance(hyp, reference);
    let mut seen: BTreeSet<Vec<S>> = BTreeSet::new();
    seen.insert(hyp.to_vec());
    let mut frontier = vec![hyp.to_vec()];
    let mut depth = 0;
    while !frontier.is_empty() && depth + 1 < best {
        depth += 1;
        let mut next = Vec::new();
        for seq in &frontier {
            let n = seq.len();
            for start in 0..n {
                for len in 1..=(n - start) {
                    for dest in 0..=(n - len) {
                        if dest == start {
                            continue;
                        }
                        let cand = shift_block(seq, start, len, dest);
                        if seen.contains(&cand) {
                            continue;
                        }
                        best = best.min(depth + edit_distance(&cand, reference));
                        seen.insert(cand.clone());
                        next.push(cand);
                    }
                }
            }
        }
        frontier = next;
    }
    best
}

/// Greedy search: each round applies the block shift with the largest
/// reduction of edit distance (first found on ties) and stops once no shift
/// reduces it.
pub fn greedy_edits<S: PartialEq + Clone>(hyp: &[S], reference: &[S]) -> usize {
    let mut cur = hyp.to_vec();
    let mut shifts = 0;
    loop {
        let dist = edit_distance(&cur, reference);
        if dist == 0 {
            return shifts;
        }
        let mut best: Option<(usize, Vec<S>)> = None;
        let n = cur.len();
        for start in 0..n {
            for len in 1..=MAX_SHIFT_SIZE.min(n - start) {
                for dest in 0..=(n - len) {
                    if dest == start {
                        continue;
                    }
                    let cand = shift_block(&cur, start, len, dest);
                    let d = edit_distance(&cand, reference);
                    if d < dist && best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                        best = Some((d, cand));
                    }
                }
            }
        }
        match best {
            Some((_, next)) => {
                cur = next;
                shifts += 1;
            }
            None => return shifts + dist,
        }
    }
}
