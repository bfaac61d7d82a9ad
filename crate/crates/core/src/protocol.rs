//! Two-party protocols with exact bit accounting.
//!
//! Every payload is a self-delimiting bit string: naturals are an Elias-gamma
//! length followed by the big-endian bits, integers add a sign bit, and
//! rationals are an integer numerator and a natural denominator.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{select_outcome, Backend};
use crate::myerson::{argmax_nonnegative, encode_ironed, iron, threshold_price, IronedCode, SingleDimDistribution};
use crate::numerics::{render, Bidder, Interest, Rational, TypeLabel};
use crate::reduction::{bidder1_day1, bidder1_day2, build_instance, DisjInput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Party {
    Alice,
    Bob,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitWriter {
    bits: Vec<bool>,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bit(&mut self, b: bool) {
        self.bits.push(b);
    }

    /// Elias gamma code of `n >= 1`.
    pub fn gamma(&mut self, n: u64) {
        assert!(n >= 1, "gamma code needs a positive integer");
        let width = 64 - n.leading_zeros() as usize;
        self.bits.extend(std::iter::repeat(false).take(width - 1));
        for i in (0..width).rev() {
            self.bits.push((n >> i) & 1 == 1);
        }
    }

    pub fn natural(&mut self, x: &BigUint) {
        let width = x.bits();
        self.gamma(width + 1);
        for i in (0..width).rev() {
            self.bits.push(x.bit(i));
        }
    }

    pub fn integer(&mut self, x: &BigInt) {
        self.bit(x.sign() == Sign::Minus);
        self.natural(x.magnitude());
    }

    pub fn rational(&mut self, q: &Rational) {
        self.integer(q.numer());
        self.natural(q.denom().magnitude());
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a [bool]) -> Self {
        BitReader { bits, pos: 0 }
    }

    pub fn bit(&mut self) -> Result<bool> {
        let b = *self
            .bits
            .get(self.pos)
            .ok_or_else(|| Error::Protocol(format!("payload ends at bit {}", self.pos)))?;
        self.pos += 1;
        Ok(b)
    }

    pub fn gamma(&mut self) -> Result<u64> {
        let mut zeros = 0;
        while !self.bit()? {
            zeros += 1;
            if zeros >= 64 {
                return Err(Error::Protocol("gamma prefix too long".into()));
            }
        }
        let mut n = 1u64;
        for _ in 0..zeros {
            n = (n << 1) | u64::from(self.bit()?);
        }
        Ok(n)
    }

    pub fn natural(&mut self) -> Result<BigUint> {
        let width = self.gamma()? - 1;
        let mut x = BigUint::zero();
        for _ in 0..width {
            x <<= 1;
            if self.bit()? {
                x += 1u32;
            }
        }
        Ok(x)
    }

    pub fn integer(&mut self) -> Result<BigInt> {
        let negative = self.bit()?;
        let mag = self.natural()?;
        Ok(BigInt::from_biguint(
            if negative { Sign::Minus } else { Sign::Plus },
            mag,
        ))
    }

    pub fn rational(&mut self) -> Result<Rational> {
        let num = self.integer()?;
        let den = self.natural()?;
        if den.is_zero() {
            return Err(Error::Protocol("zero denominator".into()));
        }
        Ok(Rational::new(num, BigInt::from(den)))
    }

    pub fn finish(&self) -> Result<()> {
        if self.pos == self.bits.len() {
            Ok(())
        } else {
            Err(Error::Protocol(format!(
                "{} trailing bits",
                self.bits.len() - self.pos
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub sender: Party,
    pub payload: Vec<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    messages: Vec<Message>,
    total_bits: usize,
}

impl Transcript {
    pub fn send(&mut self, sender: Party, payload: Vec<bool>) {
        self.total_bits += payload.len();
        self.messages.push(Message { sender, payload });
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn total_bits(&self) -> usize {
        self.total_bits
    }

    pub fn bits_from(&self, party: Party) -> usize {
        self.messages
            .iter()
            .filter(|m| m.sender == party)
            .map(|m| m.payload.len())
            .sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TranscriptSummary {
    pub messages: usize,
    pub bits_alice: usize,
    pub bits_bob: usize,
    pub total_bits: usize,
    pub outcome: String,
}

impl TranscriptSummary {
    pub fn new(t: &Transcript, outcome: String) -> Self {
        TranscriptSummary {
            messages: t.messages().len(),
            bits_alice: t.bits_from(Party::Alice),
            bits_bob: t.bits_from(Party::Bob),
            total_bits: t.total_bits(),
            outcome,
        }
    }
}

fn encode_code(code: &IronedCode) -> Vec<bool> {
    let mut w = BitWriter::new();
    w.rational(&code.top);
    w.rational(&code.bottom);
    w.rational(&code.mass);
    w.into_bits()
}

fn decode_code(bits: &[bool]) -> Result<Rational> {
    let mut r = BitReader::new(bits);
    let top = r.rational()?;
    let bottom = r.rational()?;
    let mass = r.rational()?;
    r.finish()?;
    if mass.is_zero() {
        return Err(Error::Protocol("zero block mass".into()));
    }
    Ok(IronedCode { top, bottom, mass }.decode())
}

fn encode_price(price: &Rational) -> Vec<bool> {
    let mut w = BitWriter::new();
    w.rational(price);
    w.into_bits()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingleDimRun {
    /// 0 for Alice's bidder, 1 for Bob's.
    pub winner: Option<usize>,
    pub price: Option<Rational>,
    pub transcript: Transcript,
}

/// Each party sends the compact code of its ironed virtual value; the
/// winner's party then sends the threshold price.
pub fn run_singledim_protocol(d1: &SingleDimDistribution, v1: u64, d2: &SingleDimDistribution, v2: u64) -> Result<SingleDimRun> {
    let mut t = Transcript::default();
    let k1 = d1.position(v1)?;
    let k2 = d2.position(v2)?;
    t.send(Party::Alice, encode_code(&encode_ironed(d1, k1)?));
    t.send(Party::Bob, encode_code(&encode_ironed(d2, k2)?));
    let phis = [
        decode_code(&t.messages()[0].payload)?,
        decode_code(&t.messages()[1].payload)?,
    ];
    let winner = argmax_nonnegative(&phis);
    let price = match winner {
        None => None,
        Some(w) => {
            let (d, party) = if w == 0 { (d1, Party::Alice) } else { (d2, Party::Bob) };
            let price = threshold_price(d, &iron(d)?.phi_bar, w, &phis)
                .ok_or_else(|| Error::Protocol("winner has no threshold value".into()))?;
            t.send(party, encode_price(&price));
            Some(price)
        }
    };
    Ok(SingleDimRun {
        winner,
        price,
        transcript: t,
    })
}

/// Recomputes the single-dim outcome from the transcript alone.
pub fn replay_singledim(t: &Transcript) -> Result<(Option<usize>, Option<Rational>)> {
    let msgs = t.messages();
    if msgs.len() < 2 {
        return Err(Error::Protocol("missing virtual-value messages".into()));
    }
    let phis = [decode_code(&msgs[0].payload)?, decode_code(&msgs[1].payload)?];
    let winner = argmax_nonnegative(&phis);
    let price = match (winner, msgs.get(2)) {
        (None, None) => None,
        (Some(_), Some(m)) => {
            let mut r = BitReader::new(&m.payload);
            let p = r.rational()?;
            r.finish()?;
            Some(p)
        }
        _ => return Err(Error::Protocol("price message does not match the winner".into())),
    };
    Ok((winner, price))
}

/// Alice's full distribution: `n`, then both interest rows as rationals.
pub fn fulltransfer_message(x: &[bool]) -> Result<Vec<bool>> {
    let n = x.len();
    let (day1, _) = bidder1_day1(n)?;
    let (day2, _) = bidder1_day2(n, x)?;
    let mut w = BitWriter::new();
    w.gamma(n as u64);
    for q in day1.iter().chain(&day2) {
        w.rational(q);
    }
    Ok(w.into_bits())
}

fn decode_table(bits: &[bool]) -> Result<(usize, Vec<Rational>, Vec<Rational>)> {
    let mut r = BitReader::new(bits);
    let n = r.gamma()? as usize;
    let rows = n + 2;
    let mut all = Vec::with_capacity(2 * rows);
    for _ in 0..2 * rows {
        all.push(r.rational()?);
    }
    r.finish()?;
    let day2 = all.split_off(rows);
    Ok((n, all, day2))
}

fn encode_support(support: &[Option<Bidder>]) -> Vec<bool> {
    vec![
        support.contains(&Some(Bidder::One)),
        support.contains(&Some(Bidder::Two)),
        support.contains(&None),
    ]
}

fn decode_support(bits: &[bool]) -> Result<Vec<Option<Bidder>>> {
    if bits.len() != 3 {
        return Err(Error::Protocol(format!("outcome needs 3 bits, got {}", bits.len())));
    }
    let mut out = Vec::new();
    for (flag, o) in bits.iter().zip([Some(Bidder::One), Some(Bidder::Two), None]) {
        if *flag {
            out.push(o);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FullTransferRun {
    /// Outcome support at `(t_1^1, t_2^1)`.
    pub outcome: Vec<Option<Bidder>>,
    pub transcript: Transcript,
}

/// Alice ships her whole distribution; Bob runs the certified pipeline and
/// answers with the outcome support at the lowest day1 profile.
pub fn run_fulltransfer_protocol(d: &DisjInput) -> Result<FullTransferRun> {
    let mut t = Transcript::default();
    t.send(Party::Alice, fulltransfer_message(d.x())?);

    let (n, day1, day2) = decode_table(&t.messages()[0].payload)?;
    if n != d.n() {
        return Err(Error::Protocol(format!("Alice announced n = {n}, Bob holds {}", d.n())));
    }
    let (inst, _) = build_instance(d)?;
    let alice = inst.bidder(Bidder::One);
    if alice.probs[0] != day1 || alice.probs[1] != day2 {
        return Err(Error::Protocol("decoded table differs from Alice's distribution".into()));
    }
    let low = TypeLabel::new(1, Interest::Day1);
    let outcome = select_outcome(&inst, low, low, Backend::Flow)?;
    t.send(Party::Bob, encode_support(&outcome));
    Ok(FullTransferRun { outcome, transcript: t })
}

pub fn replay_fulltransfer(t: &Transcript) -> Result<Vec<Option<Bidder>>> {
    let msgs = t.messages();
    if msgs.len() != 2 {
        return Err(Error::Protocol(format!("expected 2 messages, got {}", msgs.len())));
    }
    decode_table(&msgs[0].payload)?;
    decode_support(&msgs[1].payload)
}

/// Poly-bounded random distribution: values `1..=n`, weights drawn from
/// `1..=n` and normalized, so every rational has `O(log n)`-bit parts.
pub fn random_singledim<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SingleDimDistribution {
    let weights: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=n as u64)).collect();
    let total: u64 = weights.iter().sum();
    let probs = weights
        .iter()
        .map(|&w| Rational::new(BigInt::from(w), BigInt::from(total)))
        .collect();
    SingleDimDistribution::new((1..=n as u64).collect(), probs).expect("positive weights summing to total")
}

/// Both parties' distributions and values for one seeded single-dim run.
pub fn singledim_draw(n: usize, seed: u64) -> (SingleDimDistribution, u64, SingleDimDistribution, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d1 = random_singledim(n, &mut rng);
    let d2 = random_singledim(n, &mut rng);
    let v1 = rng.gen_range(1..=n as u64);
    let v2 = rng.gen_range(1..=n as u64);
    (d1, v1, d2, v2)
}

/// Seeded disjointness input of length `n`.
pub fn random_disj(n: usize, seed: u64) -> DisjInput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = (0..n).map(|_| rng.gen()).collect();
    let y = (0..n).map(|_| rng.gen()).collect();
    DisjInput::new(x, y).expect("equal lengths")
}

/// `true` iff no index has `x_i = y_i = 1`.
pub fn disj_oracle(d: &DisjInput) -> bool {
    !d.x().iter().zip(d.y()).any(|(a, b)| *a && *b)
}

/// Disjointness read off a revenue-optimal auction: Bidder One alone wins
/// at `(t_1^1, t_2^1)` exactly when the inputs are disjoint.
pub fn disj_via_auction(d: &DisjInput) -> Result<bool> {
    let (inst, _) = build_instance(d)?;
    let low = TypeLabel::new(1, Interest::Day1);
    let support = select_outcome(&inst, low, low, Backend::Flow)?;
    Ok(support == [Some(Bidder::One)])
}

pub fn render_support(support: &[Option<Bidder>]) -> String {
    let parts: Vec<String> = support
        .iter()
        .map(|o| match o {
            Some(b) => format!("bidder{b}"),
            None => "none".to_string(),
        })
        .collect();
    format!("{{{}}}", parts.join(","))
}

pub fn render_singledim(run: &SingleDimRun) -> String {
    match (&run.winner, &run.price) {
        (Some(w), Some(p)) => format!("bidder{} pays {}", w + 1, render(p)),
        _ => "unallocated".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::myerson::myerson_winner;
    use crate::numerics::{int, ratio};
    use proptest::prelude::*;

    #[test]
    fn gamma_round_trip() {
        let mut w = BitWriter::new();
        for n in [1u64, 2, 3, 7, 8, 1000] {
            w.gamma(n);
        }
        let bits = w.into_bits();
        let mut r = BitReader::new(&bits);
        for n in [1u64, 2, 3, 7, 8, 1000] {
            assert_eq!(r.gamma().unwrap(), n);
        }
        r.finish().unwrap();
    }

    #[test]
    fn truncated_payload() {
        let mut w = BitWriter::new();
        w.rational(&ratio(-7, 3));
        let mut bits = w.into_bits();
        bits.pop();
        assert!(matches!(BitReader::new(&bits).rational(), Err(Error::Protocol(_))));
    }

    proptest! {
        #[test]
        fn rational_round_trip(num in -1_000_000i64..1_000_000, den in 1i64..1_000_000) {
            let q = ratio(num, den);
            let mut w = BitWriter::new();
            w.rational(&q);
            let bits = w.into_bits();
            let mut r = BitReader::new(&bits);
            prop_assert_eq!(r.rational().unwrap(), q);
            prop_assert!(r.finish().is_ok());
        }
    }

    #[test]
    fn point_mass_pair() {
        let d = SingleDimDistribution::point_mass(5);
        let run = run_singledim_protocol(&d, 5, &d, 5).unwrap();
        assert_eq!(run.winner, Some(0));
        assert_eq!(run.price, Some(int(5)));
        assert_eq!(run.transcript.messages().len(), 3);
        assert_eq!(replay_singledim(&run.transcript).unwrap(), (run.winner, run.price.clone()));
        let t = &run.transcript;
        assert_eq!(t.total_bits(), t.bits_from(Party::Alice) + t.bits_from(Party::Bob));
    }

    #[test]
    fn oracle_polarity() {
        let yes = DisjInput::from_bits("10", "01").unwrap();
        let no = DisjInput::from_bits("10", "10").unwrap();
        let zeros = DisjInput::from_bits("000", "111").unwrap();
        assert!(disj_oracle(&yes));
        assert!(!disj_oracle(&no));
        assert!(disj_oracle(&zeros));
    }

    #[test]
    fn seeded_singledim_draws() {
        let (d1, v1, _, _) = singledim_draw(16, 9);
        let (e1, w1, _, _) = singledim_draw(16, 9);
        assert_eq!((d1.clone(), v1), (e1, w1));
        assert_eq!(d1.len(), 16);
        let run = run_singledim_protocol(&d1, v1, &d1, v1).unwrap();
        assert_eq!(run.winner, myerson_winner(&[d1.clone(), d1], &[v1, v1]).unwrap().winner);
    }

    #[test]
    fn support_codec() {
        for s in [vec![Some(Bidder::One)], vec![Some(Bidder::Two), None], vec![None]] {
            assert_eq!(decode_support(&encode_support(&s)).unwrap(), s);
        }
        assert_eq!(render_support(&[Some(Bidder::One), None]), "{bidder1,none}");
    }
}
