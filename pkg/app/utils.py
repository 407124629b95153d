def sanitize_filename(filename: str) -> str:
    """Removes risky characters from run ids and panel names."""
    cleaned = "".join(
        [c for c in filename if c.isalpha() or c.isdigit() or c in (".", "_", "-")]
    ).strip(".")
    return cleaned or "run"
