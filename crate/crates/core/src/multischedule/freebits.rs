/// Per-query occupancy mask over the bits of one frame payload. A set bit is
/// held by a resident that conflicts with the signal being placed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeBits {
    width: u32,
    words: Vec<u64>,
}

impl FreeBits {
    pub fn new(width: u32) -> Self {
        FreeBits {
            width,
            words: vec![0; (width as usize).div_ceil(64)],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn is_set(&self, bit: u32) -> bool {
        self.words[bit as usize / 64] >> (bit % 64) & 1 == 1
    }

    /// Marks `[start, end)`, clamped to the width.
    pub fn mark(&mut self, start: u32, end: u32) {
        let end = end.min(self.width);
        let mut bit = start;
        while bit < end {
            let word = bit as usize / 64;
            let lo = bit % 64;
            let hi = (end - (bit - lo)).min(64);
            let mask = if hi - lo == 64 {
                u64::MAX
            } else {
                ((1u64 << (hi - lo)) - 1) << lo
            };
            self.words[word] |= mask;
            bit += hi - lo;
        }
    }

    /// First set bit in `[from, to)`.
    fn next_set(&self, from: u32, to: u32) -> Option<u32> {
        let mut bit = from;
        while bit < to {
            let word = self.words[bit as usize / 64] >> (bit % 64);
            if word != 0 {
                let found = bit + word.trailing_zeros();
                return (found < to).then_some(found);
            }
            bit += 64 - bit % 64;
        }
        None
    }

    /// First clear bit at or after `from`.
    fn next_clear(&self, from: u32) -> Option<u32> {
        let mut bit = from;
        while bit < self.width {
            let word = !self.words[bit as usize / 64] >> (bit % 64);
            if word != 0 {
                let found = bit + word.trailing_zeros();
                return (found < self.width).then_some(found);
            }
            bit += 64 - bit % 64;
        }
        None
    }

    /// Smallest offset `>= from` starting a run of at least `len` clear bits.
    pub fn first_free_run(&self, len: u32, from: u32) -> Option<u32> {
        let mut start = from;
        while start.checked_add(len)? <= self.width {
            match self.next_set(start, start + len) {
                None => return Some(start),
                Some(blocked) => start = self.next_clear(blocked + 1)?,
            }
        }
        None
    }
}
