"""``szone`` command line: key ceremonies, broadcast/assess, simulation, fault injection.

Every command is batch and deterministic: randomness comes from ``--seed``
and time from ``--at``.  Results go to stdout; diagnostics and error lines
go to stderr.  Exit codes: 0 success, 1 assessment not authorized,
2 usage error, 3 crypto or state error.
"""

from __future__ import annotations

import functools
import hashlib
import json
import logging
import random
import sys
from pathlib import Path

import click

from . import protocol, simulator
from .abe import AbeError
from .codec import DecodeError
from .groups import GroupError
from .policy import PolicyError
from .primitives import ZeroWindow

log = logging.getLogger("securezone")

EXIT_NOT_AUTHORIZED = 1
EXIT_STATE = 3

_STATE_ERRORS = (protocol.ProtocolError, AbeError, DecodeError, GroupError, PolicyError,
                 simulator.ScenarioInvalid, ZeroWindow, OSError, ValueError, KeyError)


def _fail(exc: Exception):
    line = {"error": type(exc).__name__, "message": str(exc)}
    click.echo(json.dumps(line, sort_keys=True), err=True)
    sys.exit(EXIT_STATE)


def guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _STATE_ERRORS as exc:
            log.debug("command failed", exc_info=True)
            _fail(exc)
    return wrapper


def fingerprint(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def _write(path: str, data: bytes | str):
    raw = data.encode() if isinstance(data, str) else data
    Path(path).write_bytes(raw)
    click.echo(f"wrote {path} fingerprint={fingerprint(raw)}")


def _load_ca(path: str) -> protocol.CentralAuthority:
    return protocol.CentralAuthority.from_json(Path(path).read_text())


@click.group()
@click.option("-v", "--verbose", count=True, help="More diagnostics on stderr.")
def cli(verbose):
    """Secure-zone key infrastructure and broadcast advisory toolkit."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


# -- ca -----------------------------------------------------------------------

@cli.group()
def ca():
    """Central authority ceremonies."""


@ca.command("init")
@click.option("--seed", type=int, required=True, help="RNG seed for all CA secrets.")
@click.option("--attr", "universe", multiple=True, help="Attribute in the managed universe (repeatable).")
@click.option("--window", type=click.IntRange(min=1), default=30, show_default=True,
              help="Token window in seconds.")
@click.option("--out", type=click.Path(dir_okay=False), default="ca.json", show_default=True)
@guarded
def ca_init(seed, universe, window, out):
    """Generate ABE system keys, the CA signing key and the token seed."""
    state = protocol.ca_setup(random.Random(seed), universe=universe, window=window)
    _write(out, state.to_json())


# -- sza ----------------------------------------------------------------------

@cli.group()
def sza():
    """Secure zone authority ceremonies."""


@sza.command("register")
@click.option("--ca", "ca_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--id", "sza_id", type=click.IntRange(0, 0xFFFFFFFF), required=True)
@click.option("--policy", required=True, help="Zone policy, e.g. 'officer or rangemaster'.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="SZA state file.")
@click.option("--cert-out", type=click.Path(dir_okay=False), help="Also write the certificate file.")
@guarded
def sza_register(ca_path, sza_id, policy, seed, out, cert_out):
    """Create an SZA keypair and have the CA certify it (updates the CA file)."""
    authority = _load_ca(ca_path)
    state = protocol.create_sza(authority, sza_id, policy, random.Random(seed))
    Path(ca_path).write_text(authority.to_json())
    _write(out, state.to_json())
    if cert_out:
        _write(cert_out, state.certificate.to_file())


# -- firearm ------------------------------------------------------------------

@cli.group()
def firearm():
    """Firearm registration and on-device assessment."""


@firearm.command("register")
@click.option("--ca", "ca_path", type=click.Path(exists=True, dir_okay=False), default="ca.json",
              show_default=True)
@click.option("--attr", "attrs", multiple=True, required=True, help="Granted attribute (repeatable).")
@click.option("--firearm-id", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@click.option("--user-id", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@click.option("--expires", "et", type=click.IntRange(0, 2**64 - 1), required=True,
              help="Expiration time et, POSIX seconds.")
@click.option("--issued-at", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default="firearm.tpd", show_default=True)
@guarded
def firearm_register(ca_path, attrs, firearm_id, user_id, et, issued_at, seed, out):
    """Issue an ABE key bundle for one firearm/user."""
    bundle = protocol.firearm_register(_load_ca(ca_path), attrs, firearm_id, user_id, et,
                                       random.Random(seed), issued_at=issued_at)
    _write(out, bundle.to_bytes())


@firearm.command("assess")
@click.option("--bundle", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--message", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--at", "now", type=click.IntRange(min=0), required=True, help="Firearm clock, POSIX seconds.")
@click.option("--skew", type=click.IntRange(min=0), default=protocol.DEFAULT_SKEW_WINDOWS, show_default=True,
              help="Token windows tolerated either side of the local one.")
@guarded
def firearm_assess(bundle, message, now, skew):
    """Assess one zone message; prints the outcome token and exits 0 only if AUTHORIZED."""
    key_bundle = protocol.FirearmKeyBundle.from_bytes(Path(bundle).read_bytes())
    result = protocol.assess(key_bundle, Path(message).read_bytes(), now, skew=skew)
    click.echo(str(result))
    if not result.authorized:
        sys.exit(EXIT_NOT_AUTHORIZED)


# -- zone ---------------------------------------------------------------------

@cli.group()
def zone():
    """Zone broadcast."""


@zone.command("broadcast")
@click.option("--sza", "sza_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--at", "now", type=click.IntRange(min=0), required=True, help="SZA clock, POSIX seconds.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@guarded
def zone_broadcast(sza_path, now, seed, out):
    """Compose one zone message at time --at."""
    state = protocol.SzaState.from_json(Path(sza_path).read_text())
    _write(out, protocol.compose_zone_message(state, now, random.Random(seed)))


# -- inspection and tooling ----------------------------------------------------

def describe_file(data: bytes) -> dict:
    if data.startswith(protocol.BUNDLE_MAGIC):
        return {"type": "bundle", **protocol.FirearmKeyBundle.from_bytes(data).describe()}
    if data.startswith(protocol.CERT_MAGIC):
        cert = protocol.Certificate.from_file(data)
        return {"type": "certificate", "sza_id": cert.sza_id, "public_key": cert.public_key.hex(),
                "signature": cert.signature.hex()}
    if data.startswith(protocol.MESSAGE_MAGIC):
        msg = protocol.parse_zone_message(data)
        return {"type": "message", "suite": msg.suite_id, "policy": msg.policy,
                "header_bytes": len(msg.header.to_bytes()), "outer_bytes": len(msg.outer.to_bytes()),
                "total_bytes": len(data)}
    text = data.decode(errors="replace")
    if protocol.CA_STATE_FORMAT in text:
        authority = protocol.CentralAuthority.from_json(text)
        return {"type": "ca", "ca_public_key": authority.ca_public_key.hex(),
                "universe": sorted(authority.universe), "window": authority.window,
                "registered_szas": sorted(authority.registry)}
    if protocol.SZA_STATE_FORMAT in text:
        state = protocol.SzaState.from_json(text)
        return {"type": "sza", "sza_id": state.sza_id, "public_key": state.signing.public.hex(),
                "policy": protocol.serialize_policy(state.policy), "window": state.window}
    raise DecodeError("unrecognized file type", 0)


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@guarded
def inspect(path):
    """Print the public contents of a bundle, certificate, message or state file."""
    click.echo(json.dumps(describe_file(Path(path).read_bytes()), indent=2, sort_keys=True))


@cli.command()
@click.option("--scenario", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="JSON-lines event log.")
@click.option("--json", "as_json", is_flag=True, help="Print the summary as JSON instead of text.")
@guarded
def simulate(scenario, out, as_json):
    """Run a scenario; write the event log and print the summary."""
    event_log = simulator.run(simulator.load_scenario(scenario))
    Path(out).write_text(simulator.dump_log(event_log))
    summary = simulator.report(event_log)
    if as_json:
        click.echo(json.dumps(summary, indent=2, sort_keys=True))
    else:
        click.echo(simulator.format_report(summary), nl=False)


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--byte", "index", type=click.IntRange(min=0), required=True, help="Byte offset to corrupt.")
@click.option("--xor", "mask", type=click.IntRange(1, 255), default=0xFF, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Output file (default: modify in place).")
@guarded
def tamper(path, index, mask, out):
    """Flip bits of one byte of a file for fault-injection runs."""
    data = bytearray(Path(path).read_bytes())
    if index >= len(data):
        raise click.BadParameter(f"file has only {len(data)} bytes", param_hint="--byte")
    data[index] ^= mask
    _write(out or path, bytes(data))


def main():
    cli(prog_name="szone")


if __name__ == "__main__":
    main()
