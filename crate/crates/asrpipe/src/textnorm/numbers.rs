//! Digits to English cardinal words, hyphenless ("twenty one"), so spelled
//! numbers tokenize the same way as the rest of a transcript.

const ONES: [&str; 20] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen",
    "nineteen",
];

const TENS: [&str; 10] = [
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
];

const SCALES: [&str; 5] = ["", "thousand", "million", "billion", "trillion"];

/// Largest value spellable with the scale words above (10^15 - 1).
const MAX_SPELLABLE: u64 = 999_999_999_999_999;

/// Spells a nonnegative integer as English cardinal words.
pub fn spell_cardinal(n: u64) -> String {
    assert!(n <= MAX_SPELLABLE, "value out of spellable range: {n}");
    if n == 0 {
        return "zero".to_string();
    }
    // split into three-digit groups, most significant first
    let mut groups = Vec::new();
    let mut rest = n;
    while rest > 0 {
        groups.push((rest % 1000) as usize);
        rest /= 1000;
    }
    let mut words: Vec<&str> = Vec::new();
    for (scale, &group) in groups.iter().enumerate().rev() {
        if group == 0 {
            continue;
        }
        push_under_thousand(group, &mut words);
        if scale > 0 {
            words.push(SCALES[scale]);
        }
    }
    words.join(" ")
}

fn push_under_thousand(n: usize, words: &mut Vec<&'static str>) {
    debug_assert!(n > 0 && n < 1000);
    let (hundreds, rem) = (n / 100, n % 100);
    if hundreds > 0 {
        words.push(ONES[hundreds]);
        words.push("hundred");
    }
    if rem == 0 {
        return;
    }
    if rem < 20 {
        words.push(ONES[rem]);
    } else {
        words.push(TENS[rem / 10]);
        if rem % 10 > 0 {
            words.push(ONES[rem % 10]);
        }
    }
}

/// Spells a maximal ASCII digit run. Runs too long for cardinal scales are
/// read digit by digit.
pub fn spell_digit_run(run: &str) -> String {
    debug_assert!(!run.is_empty() && run.bytes().all(|b| b.is_ascii_digit()));
    if run.len() <= 15 {
        let value: u64 = run.parse().expect("15 ASCII digits fit in u64");
        spell_cardinal(value)
    } else {
        run.bytes()
            .map(|b| ONES[(b - b'0') as usize])
            .collect::<Vec<_>>()
            .join(" ")
    }
}
