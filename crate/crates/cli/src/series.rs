//! Reading back the norm series written by a run.

use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTable {
    pub t: Vec<f64>,
    pub columns: BTreeMap<String, Vec<f64>>,
    /// header order, without the leading `t`
    pub order: Vec<String>,
}

impl SeriesTable {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or("empty series file")?;
        let mut names = header.split(',').map(str::trim);
        if names.next() != Some("t") {
            return Err("series header must start with `t`".into());
        }
        let order: Vec<String> = names.map(String::from).collect();
        let mut t = Vec::new();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); order.len()];
        for (row, line) in lines.enumerate() {
            let mut fields = line.split(',');
            let mut next = |what: &str| -> Result<f64, String> {
                let raw = fields.next().ok_or_else(|| format!("row {}: missing {what}", row + 1))?;
                raw.trim().parse().map_err(|_| format!("row {}: bad number {raw:?} in {what}", row + 1))
            };
            t.push(next("t")?);
            for (c, name) in cols.iter_mut().zip(&order) {
                c.push(next(name)?);
            }
        }
        let columns = order.iter().cloned().zip(cols).collect();
        Ok(Self { t, columns, order })
    }

    /// `(t, value)` pairs of one column.
    pub fn series(&self, name: &str) -> Option<Vec<(f64, f64)>> {
        self.columns.get(name).map(|c| self.t.iter().copied().zip(c.iter().copied()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_columns() {
        let s = SeriesTable::parse("t,u1_L2,u1_Linf\n0,1.5,2\n0.5,1e-3,3\n").unwrap();
        assert_eq!(s.t, vec![0.0, 0.5]);
        assert_eq!(s.series("u1_L2").unwrap(), vec![(0.0, 1.5), (0.5, 1e-3)]);
        assert!(SeriesTable::parse("t,a\n1,x\n").is_err());
        assert!(SeriesTable::parse("x,a\n").is_err());
    }
}
