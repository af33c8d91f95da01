from app.cli.commands import allocate, distributed, simulate, solve, validate

COMMANDS = {
    module.COMMAND: module
    for module in (validate, solve, allocate, simulate, distributed)
}
