from difffree.cli import entry

entry()
