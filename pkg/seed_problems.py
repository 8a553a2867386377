# seed_problems.py
"""
Writes the fixture suite to problems/*.json.
Run: python seed_problems.py [output_dir]
"""
import logging
import sys
from pathlib import Path

from app.core.problem import dump_problem
from app.utils.fixtures import FIXTURES

logger = logging.getLogger(__name__)


def seed_problems(output_dir: Path) -> list[Path]:
    output_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, fixture in FIXTURES.items():
        path = output_dir / f"{name}.json"
        path.write_text(dump_problem(fixture.build()) + "\n")
        logger.info(f"{path}: inside {fixture.inside.rates}/{fixture.inside.distortions}, "
                    f"outside {fixture.outside.rates}/{fixture.outside.distortions}")
        written.append(path)
    return written


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent / "problems"
    for path in seed_problems(target):
        print(f"✅ {path}")
