// Arithmetic decomposition of precomposed Hangul syllables (U+AC00..=U+D7A3).

use super::TranslitError;

const S_BASE: u32 = 0xAC00;
const L_BASE: u32 = 0x1100;
const V_BASE: u32 = 0x1161;
const T_BASE: u32 = 0x11A7;
const L_COUNT: u32 = 19;
const V_COUNT: u32 = 21;
const T_COUNT: u32 = 28;
const N_COUNT: u32 = V_COUNT * T_COUNT;
const S_COUNT: u32 = L_COUNT * N_COUNT;

pub fn is_syllable(c: char) -> bool {
    (S_BASE..S_BASE + S_COUNT).contains(&(c as u32))
}

/// Splits a syllable into (lead, vowel, tail) indices; tail 0 means no final.
pub fn decompose(syllable: char) -> Result<(u8, u8, u8), TranslitError> {
    if !is_syllable(syllable) {
        return Err(TranslitError::NotHangulSyllable(syllable));
    }
    let s = syllable as u32 - S_BASE;
    let lead = s / N_COUNT;
    let vowel = (s % N_COUNT) / T_COUNT;
    let tail = s % T_COUNT;
    Ok((lead as u8, vowel as u8, tail as u8))
}

pub fn compose(lead: u8, vowel: u8, tail: u8) -> Result<char, TranslitError> {
    let (l, v, t) = (lead as u32, vowel as u32, tail as u32);
    if l >= L_COUNT || v >= V_COUNT || t >= T_COUNT {
        return Err(TranslitError::InvalidJamo(lead, vowel, tail));
    }
    let code = S_BASE + (l * V_COUNT + v) * T_COUNT + t;
    Ok(char::from_u32(code).expect("inside the syllable block"))
}

/// Replaces every precomposed syllable with its conjoining jamo; other
/// characters are copied unchanged.
pub fn to_conjoining_jamo(text: &str) -> String {
    let mut out = String::with_capacity(text.len() * 3);
    for c in text.chars() {
        match decompose(c) {
            Ok((l, v, t)) => {
                out.push(char::from_u32(L_BASE + l as u32).expect("lead jamo"));
                out.push(char::from_u32(V_BASE + v as u32).expect("vowel jamo"));
                if t > 0 {
                    out.push(char::from_u32(T_BASE + t as u32).expect("tail jamo"));
                }
            }
            Err(_) => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_ends() {
        assert_eq!(decompose('\u{AC00}').unwrap(), (0, 0, 0));
        assert_eq!(decompose('\u{D7A3}').unwrap(), (18, 20, 27));
        assert!(decompose('a').is_err());
        assert!(decompose('\u{D7A4}').is_err());
        assert!(compose(19, 0, 0).is_err());
    }

    #[test]
    fn bijection_over_block() {
        for code in S_BASE..S_BASE + S_COUNT {
            let c = char::from_u32(code).unwrap();
            let (l, v, t) = decompose(c).unwrap();
            assert_eq!(code, 0xAC00 + (l as u32 * 21 + v as u32) * 28 + t as u32);
            assert_eq!(compose(l, v, t).unwrap(), c);
        }
    }

    #[test]
    fn jamo_sequence() {
        // 한 = ㅎ ㅏ ㄴ
        assert_eq!(to_conjoining_jamo("한a"), "\u{1112}\u{1161}\u{11AB}a");
        assert_eq!(to_conjoining_jamo("가"), "\u{1100}\u{1161}");
    }
}
