import os
import sys

from dotenv import load_dotenv

# Ensure we can import from swingcert
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from swingcert.src.cli.commands import main as cli_main
from swingcert.src.core.errors import ConfigurationError
from swingcert.src.core.log import configure_logging
from swingcert.src.core.settings import get_settings


def main() -> int:
    load_dotenv()
    try:
        settings = get_settings()
    except ConfigurationError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return 1

    configure_logging(settings.log_level)
    return cli_main(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
