from tycz_lab.cli import main

main()
