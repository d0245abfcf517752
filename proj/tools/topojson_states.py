#!/usr/bin/env python3
"""Convert the us-atlas states TopoJSON into the bundled contiguous-US GeoJSON.

Usage: topojson_states.py states-10m.json > data/us_states_contiguous.geojson

Source: us-atlas 3.0.1 (ISC, Michael Bostock), derived from the U.S. Census
Bureau cartographic boundary files. Alaska, Hawaii and the territories are
dropped; each feature carries `unit_id` (USPS code), `fips` and `name`.
"""
import json
import sys

FIPS_TO_USPS = {
    "01": "AL", "02": "AK", "04": "AZ", "05": "AR", "06": "CA", "08": "CO",
    "09": "CT", "10": "DE", "11": "DC", "12": "FL", "13": "GA", "15": "HI",
    "16": "ID", "17": "IL", "18": "IN", "19": "IA", "20": "KS", "21": "KY",
    "22": "LA", "23": "ME", "24": "MD", "25": "MA", "26": "MI", "27": "MN",
    "28": "MS", "29": "MO", "30": "MT", "31": "NE", "32": "NV", "33": "NH",
    "34": "NJ", "35": "NM", "36": "NY", "37": "NC", "38": "ND", "39": "OH",
    "40": "OK", "41": "OR", "42": "PA", "44": "RI", "45": "SC", "46": "SD",
    "47": "TN", "48": "TX", "49": "UT", "50": "VT", "51": "VA", "53": "WA",
    "54": "WV", "55": "WI", "56": "WY", "60": "AS", "66": "GU", "69": "MP",
    "72": "PR", "78": "VI",
}
EXCLUDED = {"AK", "HI", "AS", "GU", "MP", "PR", "VI"}


def decode_arcs(topo):
    sx, sy = topo["transform"]["scale"]
    tx, ty = topo["transform"]["translate"]
    arcs = []
    for arc in topo["arcs"]:
        x = y = 0
        pts = []
        for dx, dy in arc:
            x += dx
            y += dy
            pts.append([round(x * sx + tx, 6), round(y * sy + ty, 6)])
        arcs.append(pts)
    return arcs


def ring(arcs, indices):
    out = []
    for idx in indices:
        pts = arcs[idx] if idx >= 0 else list(reversed(arcs[~idx]))
        out.extend(pts if not out else pts[1:])
    return out


def main():
    topo = json.load(open(sys.argv[1]))
    arcs = decode_arcs(topo)
    features = []
    for g in topo["objects"]["states"]["geometries"]:
        usps = FIPS_TO_USPS[g["id"]]
        if usps in EXCLUDED:
            continue
        if g["type"] == "Polygon":
            coords = [ring(arcs, r) for r in g["arcs"]]
        else:
            coords = [[ring(arcs, r) for r in poly] for poly in g["arcs"]]
        features.append({
            "type": "Feature",
            "properties": {"unit_id": usps, "fips": g["id"], "name": g["properties"]["name"]},
            "geometry": {"type": g["type"], "coordinates": coords},
        })
    features.sort(key=lambda f: f["properties"]["unit_id"])
    json.dump({"type": "FeatureCollection", "features": features}, sys.stdout, separators=(",", ":"))
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
