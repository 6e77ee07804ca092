"""Seeded synthetic corpus generator.

Emits multi-document packets whose page text embeds exactly the keywords and
attribute lines the bundled mock backends recover, plus matching ground
truth, so a mock pipeline run over a generated corpus scores 1.0 across the
board. Content recipes exist for the bundled classes (invoice, w2,
bank_statement); adjacent sections never share a class, since page-level
splitting cannot see a boundary between same-class neighbors.
"""
from __future__ import annotations

import json
import random
from pathlib import Path

_VENDORS = ["Acme Supplies", "Globex Industrial", "Initrode Partners", "Umbra Office Co", "Vandelay Imports"]
_EMPLOYEES = ["Jordan Reyes", "Casey Morgan", "Alex Chen", "Riley Novak", "Sam Whitaker"]
_EMPLOYERS = ["Initech LLC", "Hooli Group", "Stark Logistics", "Wayne Manufacturing"]
_ITEMS = ["Widget Alpha", "Gizmo Beta", "Fastener Pack", "Copper Coil", "Service Hour"]
_FILLER = [
    "Reference code {n}.",
    "Processed electronically.",
    "Retain this page for your records.",
    "Routing stamp {n}.",
]

RECIPE_CLASSES = ("invoice", "w2", "bank_statement")


def _date(rng: random.Random) -> str:
    return f"20{rng.randint(28, 31)}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}"


def _filler(rng: random.Random) -> str:
    return rng.choice(_FILLER).format(n=rng.randint(1000, 9999))


def _invoice(rng: random.Random, n_pages: int, inject_low: bool) -> tuple[list[list[str]], dict]:
    number = f"INV-{rng.randint(1000, 9999)}"
    vendor = rng.choice(_VENDORS)
    date = _date(rng)
    total = rng.randint(1000, 999999) / 100  # 10.00 .. 9999.99
    items = []
    for _ in range(rng.randint(1, 3)):
        items.append({"description": rng.choice(_ITEMS), "amount": round(rng.randint(100, 49999) / 100, 2)})
    first = [
        "INVOICE",
        f"Invoice Number: {number}",
        f"Vendor: {vendor}",
        f"Date: {date}",
        f"Total: ${total:,.2f}",
    ]
    for item in items:
        first.append(f"Item: {item['description']} | Amount: {item['amount']:.2f}")
    attributes = {
        "invoice_number": number,
        "vendor": vendor,
        "issue_date": date,
        "total": total,
        "line_items": items,
    }
    if inject_low:
        po = f"PO-{rng.randint(1000, 9999)}"
        first.append(f"PO Number: {po}")
        attributes["po_number"] = po
    pages = [first]
    for k in range(1, n_pages):
        pages.append([f"Invoice continuation page {k + 1}", _filler(rng)])
    return pages, attributes


def _w2(rng: random.Random, n_pages: int) -> tuple[list[list[str]], dict]:
    employee = rng.choice(_EMPLOYEES)
    employer = rng.choice(_EMPLOYERS)
    wages = round(rng.randint(2500000, 18000000) / 100, 2)
    year = str(rng.randint(2028, 2031))
    first = [
        "Form W-2 Wage and Tax Statement",
        f"Employee: {employee}",
        f"Employer: {employer}",
        f"Wages: ${wages:,.2f}",
        f"Tax Year: {year}",
    ]
    pages = [first]
    for k in range(1, n_pages):
        pages.append([f"W-2 statement continued, page {k + 1}", _filler(rng)])
    return pages, {
        "employee_name": employee,
        "employer": employer,
        "wages": wages,
        "tax_year": year,
    }


def _bank_statement(rng: random.Random, n_pages: int) -> tuple[list[list[str]], dict]:
    account = f"ACCT-{rng.randint(10000, 99999)}"
    balance = round(rng.randint(0, 5000000) / 100, 2)
    period = _date(rng)
    first = [
        "Bank Statement - Account Summary",
        f"Account: {account}",
        f"Closing Balance: ${balance:,.2f}",
        f"Period Ending: {period}",
    ]
    pages = [first]
    for k in range(1, n_pages):
        pages.append([f"Bank statement continued, page {k + 1}", _filler(rng)])
    return pages, {
        "account_number": account,
        "closing_balance": balance,
        "period_end": period,
    }


_RECIPES = {"invoice": _invoice, "w2": _w2, "bank_statement": _bank_statement}


def _lines_payload(rng: random.Random, lines: list[str]) -> list[dict]:
    payload = []
    for i, text in enumerate(lines):
        y0 = round(0.03 + 0.045 * i, 4)
        payload.append(
            {
                "text": text,
                "confidence": round(rng.uniform(88.0, 99.5), 1),
                "bbox": [0.05, y0, 0.9, round(y0 + 0.03, 4)],
            }
        )
    return payload


def generate_corpus(
    out_dir: str | Path,
    count: int = 10,
    pages_range: tuple[int, int] = (3, 8),
    seed: int = 42,
    inject_low: int = 0,
    class_names: tuple[str, ...] = RECIPE_CLASSES,
) -> Path:
    """Write packets, ground truth, and a manifest; returns the manifest path.

    Identical arguments produce byte-identical output. The first
    ``inject_low`` packets carry the low-confidence purchase-order line and
    are forced to open with an invoice section.
    """
    for name in class_names:
        if name not in _RECIPES:
            raise ValueError(f"no content recipe for class {name!r}; known: {sorted(_RECIPES)}")
    out_dir = Path(out_dir)
    packets_dir = out_dir / "packets"
    truth_dir = out_dir / "truth"
    packets_dir.mkdir(parents=True, exist_ok=True)
    truth_dir.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    lo, hi = pages_range
    if lo < 1 or hi < lo:
        raise ValueError(f"pages_range must be 1 <= lo <= hi, got {pages_range}")

    manifest_rows = []
    for idx in range(count):
        packet_id = f"packet-{idx:04d}"
        inject = idx < inject_low
        target = rng.randint(lo, hi)
        sections = []
        prev_class = None
        page_cursor = 0
        while page_cursor < target:
            if inject and not sections:
                class_name = "invoice"
            else:
                choices = [c for c in class_names if c != prev_class]
                class_name = rng.choice(choices)
            length = min(rng.randint(1, 3), target - page_cursor)
            if class_name == "invoice":
                pages_lines, attributes = _invoice(rng, length, inject and not sections)
            else:
                pages_lines, attributes = _RECIPES[class_name](rng, length)
            sections.append(
                {
                    "class_name": class_name,
                    "pages": list(range(page_cursor, page_cursor + length)),
                    "attributes": attributes,
                    "page_lines": pages_lines,
                }
            )
            page_cursor += length
            prev_class = class_name

        pages_payload = []
        for section in sections:
            for page_index, lines in zip(section["pages"], section["page_lines"]):
                pages_payload.append(
                    {"index": page_index, "lines": _lines_payload(rng, lines)}
                )
        packet_payload = {"packet_id": packet_id, "pages": pages_payload}
        truth_payload = {
            "packet_id": packet_id,
            "sections": [
                {
                    "class_name": s["class_name"],
                    "pages": s["pages"],
                    "attributes": s["attributes"],
                }
                for s in sections
            ],
        }
        packet_path = packets_dir / f"{packet_id}.json"
        truth_path = truth_dir / f"{packet_id}.json"
        packet_path.write_text(json.dumps(packet_payload, indent=2, sort_keys=True) + "\n")
        truth_path.write_text(json.dumps(truth_payload, indent=2, sort_keys=True) + "\n")
        manifest_rows.append(
            {
                "document_path": f"packets/{packet_id}.json",
                "ground_truth_path": f"truth/{packet_id}.json",
            }
        )

    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps({"documents": manifest_rows}, indent=2, sort_keys=True) + "\n")
    return manifest_path
