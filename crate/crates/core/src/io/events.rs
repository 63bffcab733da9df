//! Timestamped event files.
//!
//! Format: UTF-8 CSV with a header row; columns are the timestamp first,
//! then the `M-1` categorical indices (1-based), then the value.
//!
//! ```text
//! t,i,j,v
//! 4,1,2,5
//! 6,1,2,2
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::scalar::Real;
use crate::stream::TimestampedTuple;

use super::IoError;

/// Shape the parser validates against: the categorical mode lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamSpec {
    pub mode_lengths: Vec<usize>,
}

impl StreamSpec {
    pub fn new(mode_lengths: Vec<usize>) -> Self {
        Self { mode_lengths }
    }
}

/// Streaming reader that validates column counts, index ranges, and
/// timestamp monotonicity line by line.
pub struct EventReader<T, R> {
    lines: std::io::Lines<R>,
    spec: StreamSpec,
    header: String,
    line_no: usize,
    last_timestamp: Option<i64>,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Real> EventReader<T, BufReader<File>> {
    pub fn open(path: &Path, spec: StreamSpec) -> Result<Self, IoError> {
        Self::from_reader(BufReader::new(File::open(path)?), spec)
    }
}

impl<T: Real, R: BufRead> EventReader<T, R> {
    pub fn from_reader(reader: R, spec: StreamSpec) -> Result<Self, IoError> {
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(h) => h?,
            None => String::new(),
        };
        if !header.is_empty() {
            let cols = header.split(',').count();
            let expected = spec.mode_lengths.len() + 2;
            if cols != expected {
                return Err(IoError::Parse {
                    line: 1,
                    reason: format!("header declares {cols} columns, expected {expected}"),
                });
            }
        }
        Ok(Self {
            lines,
            spec,
            header,
            line_no: 1,
            last_timestamp: None,
            _marker: std::marker::PhantomData,
        })
    }

    /// The file's verbatim header row.
    pub fn header(&self) -> &str {
        &self.header
    }

    fn parse_line(&mut self, line: &str) -> Result<TimestampedTuple<T>, IoError> {
        let fields: Vec<&str> = line.split(',').collect();
        let expected = self.spec.mode_lengths.len() + 2;
        if fields.len() != expected {
            return Err(IoError::Parse {
                line: self.line_no,
                reason: format!("{} fields, expected {expected}", fields.len()),
            });
        }
        let timestamp: i64 = fields[0].trim().parse().map_err(|e| IoError::Parse {
            line: self.line_no,
            reason: format!("bad timestamp {:?}: {e}", fields[0]),
        })?;
        if timestamp < 0 {
            return Err(IoError::Parse {
                line: self.line_no,
                reason: format!("negative timestamp {timestamp}"),
            });
        }
        if self.last_timestamp.is_some_and(|last| timestamp < last) {
            return Err(IoError::NonMonotoneTimestamp { line: self.line_no });
        }

        let mut indices = Vec::with_capacity(self.spec.mode_lengths.len());
        for (mode, field) in fields[1..fields.len() - 1].iter().enumerate() {
            let index: usize = field.trim().parse().map_err(|e| IoError::Parse {
                line: self.line_no,
                reason: format!("bad index {field:?}: {e}"),
            })?;
            let len = self.spec.mode_lengths[mode];
            if index == 0 || index > len {
                return Err(IoError::IndexOutOfRange {
                    line: self.line_no,
                    mode,
                    index,
                    len,
                });
            }
            indices.push(index);
        }

        let value: f64 = fields[expected - 1]
            .trim()
            .parse()
            .map_err(|e| IoError::Parse {
                line: self.line_no,
                reason: format!("bad value {:?}: {e}", fields[expected - 1]),
            })?;

        self.last_timestamp = Some(timestamp);
        Ok(TimestampedTuple::new(
            indices,
            T::from_f64_lossy(value),
            timestamp,
        ))
    }
}

impl<T: Real, R: BufRead> Iterator for EventReader<T, R> {
    type Item = Result<TimestampedTuple<T>, IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            return Some(self.parse_line(&line));
        }
    }
}

pub fn open_events<T: Real>(
    path: &Path,
    spec: StreamSpec,
) -> Result<EventReader<T, BufReader<File>>, IoError> {
    EventReader::open(path, spec)
}

/// Reads and validates a whole file.
pub fn read_events<T: Real>(
    path: &Path,
    spec: StreamSpec,
) -> Result<Vec<TimestampedTuple<T>>, IoError> {
    open_events(path, spec)?.collect()
}

/// Writes events in the canonical column order. `header` of `None` derives
/// `t,i1,..,i{M-1},v` from the first tuple.
pub fn write_events<T: Real>(
    path: &Path,
    header: Option<&str>,
    events: &[TimestampedTuple<T>],
) -> Result<(), IoError> {
    let mut out = BufWriter::new(File::create(path)?);
    let derived;
    let header = match header {
        Some(h) => h,
        None => {
            let m = events.first().map_or(1, |t| t.indices.len());
            let cols: Vec<String> = (1..=m).map(|i| format!("i{i}")).collect();
            derived = format!("t,{},v", cols.join(","));
            &derived
        }
    };
    writeln!(out, "{header}")?;
    for tuple in events {
        write!(out, "{}", tuple.timestamp)?;
        for index in &tuple.indices {
            write!(out, ",{index}")?;
        }
        writeln!(out, ",{}", tuple.value.to_f64_lossy())?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn reader(content: &str, lengths: Vec<usize>) -> EventReader<f64, Cursor<&[u8]>> {
        EventReader::from_reader(Cursor::new(content.as_bytes()), StreamSpec::new(lengths))
            .unwrap()
    }

    #[test]
    fn parses_the_worked_example() {
        let events: Vec<_> = reader("t,i,j,v\n4,1,2,5\n6,1,2,2\n", vec![2, 3])
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[0], TimestampedTuple::new(vec![1, 2], 5.0, 4));
        assert_eq!(events[1], TimestampedTuple::new(vec![1, 2], 2.0, 6));
    }

    #[test]
    fn empty_file_yields_nothing() {
        let events: Vec<_> = reader("", vec![2, 2]).collect();
        assert!(events.is_empty());
    }

    #[test]
    fn decreasing_timestamps_name_the_line() {
        let mut r = reader("t,i,j,v\n6,1,2,2\n4,1,2,5\n", vec![2, 3]);
        assert!(r.next().unwrap().is_ok());
        match r.next().unwrap() {
            Err(IoError::NonMonotoneTimestamp { line }) => assert_eq!(line, 3),
            other => panic!("expected NonMonotoneTimestamp, got {other:?}"),
        }
    }

    #[test]
    fn index_range_is_checked_against_spec() {
        let mut r = reader("t,i,j,v\n4,1,9,5\n", vec![2, 3]);
        match r.next().unwrap() {
            Err(IoError::IndexOutOfRange {
                line,
                mode,
                index,
                len,
            }) => {
                assert_eq!((line, mode, index, len), (2, 1, 9, 3));
            }
            other => panic!("expected IndexOutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn header_column_count_must_match() {
        let r = EventReader::<f64, _>::from_reader(
            Cursor::new(b"t,i,v\n".as_slice()),
            StreamSpec::new(vec![2, 3]),
        );
        assert!(matches!(r, Err(IoError::Parse { line: 1, .. })));
    }

    #[test]
    fn round_trip_preserves_content() {
        let dir = std::env::temp_dir().join(format!("evcp-events-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("events.csv");
        let events = vec![
            TimestampedTuple::new(vec![1, 2], 5.25, 4),
            TimestampedTuple::new(vec![2, 3], 2.0, 6),
        ];
        write_events(&path, None, &events).unwrap();
        let back = read_events::<f64>(&path, StreamSpec::new(vec![2, 3])).unwrap();
        assert_eq!(back, events);

        // serialize(parse(file)) reproduces the file byte for byte.
        let first = std::fs::read_to_string(&path).unwrap();
        let path2 = dir.join("events2.csv");
        write_events(&path2, Some("t,i1,i2,v"), &back).unwrap();
        assert_eq!(first, std::fs::read_to_string(&path2).unwrap());
        std::fs::remove_dir_all(&dir).ok();
    }
}
