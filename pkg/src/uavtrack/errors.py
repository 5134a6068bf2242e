class ParseError(ValueError):
    """Malformed input file; the message names the file and line."""

    def __init__(self, path, line_no: int, msg: str):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {msg}")
