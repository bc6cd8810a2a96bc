def parse_timestamp(text):
    """Parse an ISO-8601 timestamp."""
    raise NotImplementedError
