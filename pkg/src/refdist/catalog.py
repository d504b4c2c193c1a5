"""Laboratory test metadata: short ids, display names, units.

The default catalog covers a common chemistry and blood-count panel.  It
exists so reports and CLI output can label tests consistently; nothing in
the estimation machinery depends on it.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

__all__ = ["TestCatalogEntry", "DEFAULT_CATALOG", "catalog_by_id", "read_catalog_csv"]

CATALOG_CSV_COLUMNS = ("test_id", "display_name", "unit")


@dataclass(frozen=True)
class TestCatalogEntry:
    test_id: str
    display_name: str
    unit: str


DEFAULT_CATALOG = (
    TestCatalogEntry("TP", "total protein", "g/dL"),
    TestCatalogEntry("ALB", "albumin", "g/dL"),
    TestCatalogEntry("AST", "aspartate aminotransferase", "U/L"),
    TestCatalogEntry("ALT", "alanine aminotransferase", "U/L"),
    TestCatalogEntry("LDH", "lactate dehydrogenase", "U/L"),
    TestCatalogEntry("ALP", "alkaline phosphatase", "U/L"),
    TestCatalogEntry("GGT", "gamma-glutamyl transferase", "U/L"),
    TestCatalogEntry("CHE", "cholinesterase", "U/L"),
    TestCatalogEntry("TBIL", "total bilirubin", "mg/dL"),
    TestCatalogEntry("BUN", "blood urea nitrogen", "mg/dL"),
    TestCatalogEntry("CRE", "creatinine", "mg/dL"),
    TestCatalogEntry("UA", "uric acid", "mg/dL"),
    TestCatalogEntry("TC", "total cholesterol", "mg/dL"),
    TestCatalogEntry("TG", "triglycerides", "mg/dL"),
    TestCatalogEntry("HDL", "HDL cholesterol", "mg/dL"),
    TestCatalogEntry("LDL", "LDL cholesterol", "mg/dL"),
    TestCatalogEntry("GLU", "glucose", "mg/dL"),
    TestCatalogEntry("NA", "sodium", "mmol/L"),
    TestCatalogEntry("K", "potassium", "mmol/L"),
    TestCatalogEntry("CL", "chloride", "mmol/L"),
    TestCatalogEntry("CA", "calcium", "mg/dL"),
    TestCatalogEntry("CRP", "C-reactive protein", "mg/dL"),
    TestCatalogEntry("WBC", "white blood cell count", "10^3/uL"),
    TestCatalogEntry("RBC", "red blood cell count", "10^6/uL"),
    TestCatalogEntry("HB", "hemoglobin", "g/dL"),
    TestCatalogEntry("HT", "hematocrit", "%"),
    TestCatalogEntry("PLT", "platelet count", "10^3/uL"),
)


def catalog_by_id(entries=DEFAULT_CATALOG) -> dict:
    """Index entries by test_id, rejecting duplicates."""
    table = {}
    for entry in entries:
        if entry.test_id in table:
            raise ValueError(f"duplicate test_id {entry.test_id!r}")
        table[entry.test_id] = entry
    return table


def read_catalog_csv(path) -> tuple:
    entries = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CATALOG_CSV_COLUMNS:
            raise ValueError(
                f"expected header {','.join(CATALOG_CSV_COLUMNS)}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"line {lineno}: expected 3 fields, got {len(row)}")
            entries.append(TestCatalogEntry(*(field.strip() for field in row)))
    catalog_by_id(entries)
    return tuple(entries)
