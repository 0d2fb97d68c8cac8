"""
Report serialization.

    csv        every `BenchRow` column in declaration order; floats written
               with repr (shortest round-trip form), missing values empty
    markdown   the benchmark table layout, one line per configuration
    plotdata   tab separated: label, time_proportion, wer, wer_lm, macs,
               mean_exit (inference time as a proportion of the full model)
    macs       tab separated: label, macs, wer_lm (compute against LM WER)
"""
from csv import reader as csv_reader, writer as csv_writer
from io import StringIO
from typing import get_type_hints

from asrshrink.bench.harness import BenchReport, BenchRow


class ReportFormatError(ValueError):
    pass


class ReportFormat:
    CSV = 'csv'
    MARKDOWN = 'markdown'
    PLOTDATA = 'plotdata'
    MACS = 'macs'

    ALL = {CSV, MARKDOWN, PLOTDATA, MACS}

    FILENAMES = {
        CSV: 'report.csv',
        MARKDOWN: 'report.md',
        PLOTDATA: 'plotdata.tsv',
        MACS: 'macs_points.tsv',
    }


PLOT_COLUMNS = ['label', 'time_proportion', 'wer', 'wer_lm', 'macs', 'mean_exit']
MAC_COLUMNS = ['label', 'macs', 'wer_lm']


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _column_types():
    hints = get_type_hints(BenchRow)
    types = {}
    for name in BenchRow.columns():
        hint = hints[name]
        args = [a for a in getattr(hint, '__args__', (hint,)) if a is not type(None)]
        types[name] = args[0]
    return types


def dumps_csv(report):
    out = StringIO()
    writer = csv_writer(out, lineterminator='\n')
    columns = BenchRow.columns()
    writer.writerow(columns)
    for row in report.rows:
        writer.writerow([_cell(getattr(row, name)) for name in columns])
    return out.getvalue()


def parse_csv(text):
    rows = list(csv_reader(StringIO(text)))
    if not rows:
        raise ReportFormatError('empty report')

    header, body = rows[0], rows[1:]
    if header != BenchRow.columns():
        raise ReportFormatError('unexpected report columns: {}'.format(header))

    types = _column_types()
    report = BenchReport()
    for lineno, values in enumerate(body, 2):
        if len(values) != len(header):
            raise ReportFormatError('line {}: expected {} fields, got {}'.format(lineno, len(header), len(values)))
        try:
            parsed = {name: types[name](value) if value != '' else None for name, value in zip(header, values)}
        except ValueError as e:
            raise ReportFormatError('line {}: {}'.format(lineno, e))
        report.add(BenchRow(**parsed))
    return report


def _fixed(value, digits=4):
    return '-' if value is None else '{:.{}f}'.format(value, digits)


def dumps_markdown(report):
    lines = []
    for key in sorted(report.meta):
        if key not in ('violations', 'trends'):
            lines.append('<!-- {}: {} -->'.format(key, report.meta[key]))

    lines.append('| Configuration | Corpus | WER | WER-LM | CPU (s) | CPU LM (s) | Time reduction | MACs (G) '
                 '| Mean exit layer |')
    lines.append('|---|---|---:|---:|---:|---:|---:|---:|---:|')
    for row in report.rows:
        if row.error:
            lines.append('| {} | {} | error: {} | | | | | | |'.format(row.label, row.corpus or '', row.error))
            continue
        lines.append('| {} | {} | {} | {} | {} | {} | {} | {} | {} |'.format(
            row.label, row.corpus or '',
            _fixed(row.wer), _fixed(row.wer_lm),
            _fixed(row.wall_seconds, 3), _fixed(row.wall_seconds_lm, 3),
            _fixed(row.time_reduction, 3),
            _fixed(None if row.macs is None else row.macs / 1e9, 6),
            _fixed(row.mean_exit, 2),
        ))
    return '\n'.join(lines) + '\n'


def _tsv(header, records):
    lines = ['\t'.join(header)]
    lines.extend('\t'.join(_cell(value) for value in record) for record in records)
    return '\n'.join(lines) + '\n'


def dumps_plotdata(report):
    return _tsv(PLOT_COLUMNS, [
        (row.label, report.time_proportion(row), row.wer, row.wer_lm, row.macs, row.mean_exit)
        for row in report.rows if row.error is None
    ])


def dumps_macs(report):
    return _tsv(MAC_COLUMNS, [(row.label, row.macs, row.wer_lm) for row in report.rows if row.error is None])


DUMPERS = {
    ReportFormat.CSV: dumps_csv,
    ReportFormat.MARKDOWN: dumps_markdown,
    ReportFormat.PLOTDATA: dumps_plotdata,
    ReportFormat.MACS: dumps_macs,
}


def dumps(report, fmt):
    if fmt not in ReportFormat.ALL:
        raise ReportFormatError('unknown report format {!r}, expected one of {}'.format(fmt, sorted(ReportFormat.ALL)))
    if not report.rows:
        raise ReportFormatError('refusing to emit an empty report')
    return DUMPERS[fmt](report)


def emit(report, fmt, path):
    text = dumps(report, fmt)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text)
    return path


def read_report(path):
    with open(path, 'r', encoding='utf-8', newline='') as f:
        return parse_csv(f.read())
