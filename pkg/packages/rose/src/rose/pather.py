from pathlib import Path


def run_dir(root, key: str, length: int = 12) -> Path:
    """Output directory ``root/key[:length]``, created if missing.

    Parameters:
        root: parent directory of all runs
        key: run identifier (a hex digest)
        length: prefix length kept in the directory name

    Returns:
        run directory path
    """
    if len(key) < length:
        raise ValueError(f"{key=} is shorter than {length} characters.")
    path = Path(root) / key[:length]
    path.mkdir(parents=True, exist_ok=True)
    return path


def path_relative(src, target: Path, dest: Path | None = None):
    """Get relative path of target from base."""
    relative_path = Path(target).relative_to(src)
    if dest is None:
        return relative_path
    return dest / relative_path
