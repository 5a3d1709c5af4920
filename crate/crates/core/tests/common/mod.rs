//! Brute-force oracle shared by the integration tests.

use stablematch::instance::WeightedInstance;

/// Every matching on finite edges, as partner vectors.
pub fn all_matchings(inst: &WeightedInstance) -> Vec<Vec<Option<usize>>> {
    fn go(
        inst: &WeightedInstance,
        cur: &mut Vec<Option<usize>>,
        done: &mut Vec<bool>,
        out: &mut Vec<Vec<Option<usize>>>,
    ) {
        let Some(x) = done.iter().position(|d| !d) else {
            out.push(cur.clone());
            return;
        };
        done[x] = true;
        go(inst, cur, done, out);
        for y in x + 1..inst.len() {
            if !done[y] && inst.weight(x, y).is_finite() {
                done[y] = true;
                cur[x] = Some(y);
                cur[y] = Some(x);
                go(inst, cur, done, out);
                cur[x] = None;
                cur[y] = None;
                done[y] = false;
            }
        }
        done[x] = false;
    }
    let n = inst.len();
    let mut out = Vec::new();
    go(inst, &mut vec![None; n], &mut vec![false; n], &mut out);
    out
}

pub fn brute_stable(inst: &WeightedInstance, m: &[Option<usize>]) -> bool {
    let d = |x: usize| m[x].map_or(f64::INFINITY, |y| inst.weight(x, y).value());
    (0..inst.len()).all(|x| {
        (x + 1..inst.len()).all(|y| {
            let w = inst.weight(x, y).value();
            m[x] == Some(y) || !(w < d(x) && w < d(y))
        })
    })
}
