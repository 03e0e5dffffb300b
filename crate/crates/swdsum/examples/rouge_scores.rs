//! Scores a few candidate/reference pairs with ROUGE-1, ROUGE-2, and
//! ROUGE-L at the character level.

use swdsum::error::Result;
use swdsum::rouge::{lcs_length, rouge_l, rouge_n};

fn chars(s: &str) -> Vec<char> {
    s.chars().collect()
}

fn main() -> Result<()> {
    let pairs = [
        ("the cat sat", "the cat sat"),
        ("the cat sat", "a cat sat"),
        ("abcdef", "abdf"),
        ("完全不同", "毫无重叠"),
    ];
    println!("candidate\treference\tR-1 F\tR-2 F\tR-L F");
    for (cand, reference) in pairs {
        let c = chars(cand);
        let r = chars(reference);
        let r1 = rouge_n(&c, &r, 1, 1.0)?;
        let r2 = rouge_n(&c, &r, 2, 1.0)?;
        let rl = rouge_l(&c, &r, 1.0);
        println!(
            "{cand}\t{reference}\t{:.3}\t{:.3}\t{:.3}",
            r1.f, r2.f, rl.f
        );
    }

    // The classic longest-common-subsequence example: BCBA (length 4).
    let a = chars("ABCBDAB");
    let b = chars("BDCABA");
    println!("lcs(ABCBDAB, BDCABA) = {}", lcs_length(&a, &b));
    Ok(())
}
