#!/usr/bin/env python3
"""Regenerates the ingest/track fixtures and their golden canonical CSVs.

Golden files are computed here with Python's datetime and float repr, not
with the library under test.
"""
import datetime as dt
import gzip
import io
import os
import tarfile

HERE = os.path.dirname(os.path.abspath(__file__))


def shortest(v: float) -> str:
    """Shortest round-trip text, picking fixed vs exponent by length (ties: fixed)."""
    if v == 0:
        return "-0" if str(v).startswith("-") else "0"
    r = repr(float(v))
    sign = "-" if r.startswith("-") else ""
    r = r.lstrip("-")
    mant, _, exp = r.partition("e")
    e = int(exp) if exp else 0
    if "." in mant:
        ip, fp = mant.split(".")
    else:
        ip, fp = mant, ""
    digits = (ip + fp).lstrip("0")
    point = len(ip) + e - (len(ip + fp) - len((ip + fp).lstrip("0")))
    digits = digits.rstrip("0") or "0"
    # value = 0.<digits> * 10^point
    if point <= 0:
        fixed = "0." + "0" * (-point) + digits
    elif point >= len(digits):
        fixed = digits + "0" * (point - len(digits))
    else:
        fixed = digits[:point] + "." + digits[point:]
    x = point - 1
    sci = digits[0] + ("." + digits[1:] if len(digits) > 1 else "")
    sci += "e" + ("-" if x < 0 else "+") + f"{abs(x):02d}"
    return sign + (fixed if len(fixed) <= len(sci) else sci)


def epoch_us(text: str) -> int:
    date, _, clock = text.replace("T", " ").rstrip("Z").partition(" ")
    hms, _, frac = clock.partition(".")
    frac = (frac + "000000")[:6]
    base = dt.datetime.fromisoformat(f"{date} {hms}").replace(tzinfo=dt.timezone.utc)
    return int(base.timestamp()) * 1_000_000 + int(frac)


def write(path, text, mode="w"):
    with open(os.path.join(HERE, path), mode) as f:
        f.write(text)


def targz(members):
    raw = io.BytesIO()
    with tarfile.open(fileobj=raw, mode="w", format=tarfile.USTAR_FORMAT) as tar:
        for name, text in members:
            data = text.encode()
            info = tarfile.TarInfo(name)
            info.size = len(data)
            info.mtime = 0
            tar.addfile(info, io.BytesIO(data))
    out = io.BytesIO()
    with gzip.GzipFile(fileobj=out, mode="wb", mtime=0) as gz:
        gz.write(raw.getvalue())
    return out.getvalue()


# --- antenna export, first ten rows of the published preview -------------
ANTENNA = [
    (23, 45658.041667, -93.342, None, 26.3),
    (26, 45658.044444, None, "2.244562e+09", 25.4),
    (27, 45658.044444, -93.294, None, 25.9),
    (31, 45658.047222, -93.305, None, 24.9),
    (32, 45658.047222, None, "2.244562e+09", 24.7),
    (38, 45658.050000, None, "2.244562e+09", 24.8),
    (39, 45658.050000, -93.307, None, 24.9),
    (48, 45658.052778, None, "2.244562e+09", 23.1),
    (49, 45658.052778, -93.344, None, 23.2),
    (54, 45658.055556, -93.331, None, 23.9),
]
lines = [",index,t,time,DOY,Date,UPL_FREQ,DL_FREQ,DSS,SCID,AGC,UPL_CMD,UPL_EX,UPL_PWR,WX_HUMID"]
for i, (idx, t, agc, dl, hum) in enumerate(ANTENNA):
    nan = "NaN"
    lines.append(
        f"{i},{idx},{t:.6f},{t - 45658:.6f},1,45658,{nan},{dl if dl is not None else nan},34,21,"
        f"{agc if agc is not None else nan},{nan},{nan},{nan},{hum}"
    )
write("track/antenna_sample.csv", "\n".join(lines) + "\n")

# --- JPL transmitter rows -------------------------------------------------
JPL_HEADER = "datetime,dss,forward_power,reverse_power,drive_power,exciter_power,gain_slope,running_time"
JPL_ROWS = [
    ("2025-02-24 13:02:26.003662110", "-0.000050", "-0.000001", "-3.385930e-09", "0.000691"),
    ("2025-02-24 13:02:27.005550000", "-0.000269", "-0.000007", "-2.502670e-08", "0.005274"),
    ("2025-02-24 13:02:28.007020000", "-0.000285", "-0.000007", "8.988830e-04", "0.005277"),
    ("2025-02-24 13:02:29.008540000", "-0.000272", "-0.000007", "9.832840e-04", "0.005279"),
    ("2025-02-24 13:02:30.010380000", "-0.000264", "-0.000007", "9.654870e-04", "0.005280"),
    ("2025-02-24 13:02:31.011900000", "-0.000275", "-0.000007", "9.529170e-04", "0.005281"),
    ("2025-02-24 13:02:32.013430000", "-0.000271", "-0.000007", "9.415390e-04", "0.005277"),
    ("2025-02-24 13:02:33.015080000", "-0.000274", "-0.000007", "9.315360e-04", "0.005269"),
    ("2025-02-24 13:02:34.016600000", "-0.000273", "-0.000007", "9.227270e-04", "0.005260"),
    ("2025-02-24 13:02:35.018430000", "-0.000276", "-0.000007", "9.151180e-04", "0.005253"),
]
jpl_lines = [f"{ts},63,{fp},{rp},{dp},{ep},0.0,{i}.0" for i, (ts, fp, rp, dp, ep) in enumerate(JPL_ROWS)]


def message(subject, date, body, attachment=None, to="dsn-ops@example.org, tx-team@example.org"):
    head = [f"Subject: {subject}", f"Date: {date}", f"To: {to}"]
    if attachment:
        head.append(f"Attachment: {attachment}")
    return "\n".join(head) + "\n\n" + body


write("ingest/mailbox/jpl_x_part2.msg",
      message("DSS-63 X-sx20 transmitter data part 2 of 2", "2025-02-24T14:00:05Z", "\n".join(jpl_lines[5:]) + "\n"))
write("ingest/mailbox/jpl_x_part1.msg",
      message("DSS-63 X-sx20 transmitter data part 1 of 2", "2025-02-24T14:00:00Z",
              JPL_HEADER + "\n" + "\n".join(jpl_lines[:5]) + "\n"))
write("ingest/mailbox/jpl_s_empty.msg",
      message("DSS-63 S-t20k transmitter data part 1 of 1", "2025-02-24T14:01:00Z", JPL_HEADER + "\n"))
write("ingest/mailbox/status.msg",
      message("weekly status", "2025-02-25T09:00:00Z", "Nothing to report.\n", to="dsn-ops@example.org"))

golden = ["timestamp_us,dss,scid,forward_power,reverse_power,drive_power,exciter_power,gain_slope,running_time"]
for i, (ts, fp, rp, dp, ep) in enumerate(JPL_ROWS):
    vals = [shortest(float(x)) for x in (fp, rp, dp, ep, "0.0", f"{i}.0")]
    golden.append(f"{epoch_us(ts)},63,0," + ",".join(vals))
write("ingest/golden/jpl_X_sx20.csv", "\n".join(golden) + "\n")
write("ingest/golden/jpl_S_t20k.csv", "timestamp_us,dss,scid\n")

# --- CEC exports ------------------------------------------------------------
CEC70_HEADER = ("timestamp,dss,equipment,fwd_pwr_kw,reflected_power_kw,body_curr,beam_voltage_kv,"
                "cathode_current_a,collector_temp_c,filament_voltage_v")
CEC70_ROWS = [
    ("2025-02-24T00:00:00Z", "Agilent", "18.5", "0.21", "612.0", "61.2", "4.1", "48.5", "9.8"),
    ("2025-02-24T00:01:00Z", "Agilent", "18.75", "0.22", "615.5", "61.3", "4.1", "48.9", "9.8"),
    ("2025-02-24T00:02:00Z", "TXC", "19.0", "0.2", "610.25", "61.1", "4.2", "49.1", "9.7"),
    ("2025-02-24T00:03:00Z", "Agilent", "NaN", "0.23", "611.0", "61.2", "4.1", "49.4", "9.8"),
    ("2025-02-24T00:04:00Z", "Agilent", "20.125", "0.24", "", "61.4", "4.3", "49.8", "9.9"),
]
cec70 = [CEC70_HEADER] + [f"{t},14,{eq},{fp},{rp},{bc},{bv},{cc},{ct},{fv}" for t, eq, fp, rp, bc, bv, cc, ct, fv in CEC70_ROWS]
cec70.insert(4, "2025-02-24T00:02:30Z,14,Agilent,offline,0.2,600.0,61.0,4.0,49.0,9.7")
cec70_text = "\n".join(cec70) + "\n"
write("ingest/cec/dss14_70m.tar.gz", targz([("exports/dss14_day055.csv", cec70_text)]), "wb")
write("ingest/mailbox/day055.tar.gz", targz([("exports/dss14_day055.csv", cec70_text)]), "wb")
write("ingest/mailbox/cec_day055.msg",
      message("CEC transmitter export DSS-14 day 055", "2025-02-24T15:00:00Z", "Daily export attached.\n",
              attachment="day055.tar.gz"))

golden = ["timestamp_us,dss,scid,forward_power_kw,body_current"]
for t, eq, fp, rp, bc, bv, cc, ct, fv in CEC70_ROWS:
    cell = lambda s: "" if s in ("", "NaN") else shortest(float(s))
    golden.append(f"{epoch_us(t)},14,0,{cell(fp)},{cell(bc)}")
write("ingest/golden/cec_dss14.csv", "\n".join(golden) + "\n")

cec34 = ("timestamp,dss,equipment,forward_power_kw,reflected_power_kw,beam_voltage_kv\n"
         "2025-02-24T00:00:00Z,34,TXC,10.5,0.1,40.2\n")
write("ingest/cec/dss34_no_body_current.tar.gz", targz([("dss34.csv", cec34)]), "wb")

fp_pair = ("timestamp,dss,equipment,forward_power_kw,reflected_power_kw,body_current,beam_voltage_kv\n"
           "2025-02-24T00:00:00Z,34,TXC,0.0,0.0,0.0,0.0\n"
           "2025-02-24T00:00:10Z,34,TXC,20.0,0.3,420.0,40.1\n")
write("ingest/cec/dss34_fp_pair.tar.gz", targz([("dss34_pair.csv", fp_pair)]), "wb")
write("ingest/cec/two_csv.tar.gz", targz([("a.csv", fp_pair), ("b.csv", fp_pair)]), "wb")
write("ingest/cec/readme_only.tar.gz", targz([("README.txt", "no data\n")]), "wb")
write("ingest/cec/corrupt.tar.gz", b"\x1f\x8c\x00not a gzip stream at all", "wb")
