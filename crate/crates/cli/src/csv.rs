//! Minimal CSV output: header row, comma separator, numbers with 17
//! significant digits.

/// `v` in scientific notation with 17 significant digits, which reads back
/// to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Table {
    width: usize,
    text: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            width: header.len(),
            text: header.join(",") + "\n",
        }
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        let cells: Vec<String> = cells.into_iter().collect();
        assert_eq!(cells.len(), self.width, "row width differs from header");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}
